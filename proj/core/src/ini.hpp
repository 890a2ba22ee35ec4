#pragma once

// Small helpers over boost::property_tree for the INI files used by the
// generator spec, the log schema and the run config.

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace trace::ini {

using Tree = boost::property_tree::ptree;

/// Raised for unreadable or invalid configuration files.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline Tree read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    Tree t;
    try {
        boost::property_tree::read_ini(in, t);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    return t;
}

inline void write(const std::filesystem::path& path, const Tree& t) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    boost::property_tree::write_ini(out, t);
}

/// Section lookup that tolerates dots in section names.
inline const Tree* section(const Tree& root, const std::string& name) {
    const auto it = root.find(name);
    return it == root.not_found() ? nullptr : &it->second;
}

inline void reject_unknown(const Tree& sec, const std::string& where, std::initializer_list<const char*> known) {
    std::set<std::string> ok(known.begin(), known.end());
    for (const auto& [key, _] : sec) {
        if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in [" + where + "]");
    }
}

template <class T>
void get(const Tree& sec, const char* key, T& out, const std::string& where) {
    const auto v = sec.get_optional<std::string>(key);
    if (!v) return;
    std::istringstream in(*v);
    T parsed{};
    if constexpr (std::is_same_v<T, bool>) {
        std::string s;
        in >> s;
        if (s == "true" || s == "1" || s == "yes") parsed = true;
        else if (s == "false" || s == "0" || s == "no") parsed = false;
        else throw ConfigError("[" + where + "] " + key + ": expected a boolean, got '" + *v + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
        parsed = *v;
        in.setstate(std::ios::eofbit);
    } else {
        in >> parsed;
        if (in.fail()) throw ConfigError("[" + where + "] " + key + ": cannot parse '" + *v + "'");
        in >> std::ws;
    }
    if (!in.eof()) throw ConfigError("[" + where + "] " + key + ": trailing characters in '" + *v + "'");
    out = parsed;
}

template <class T>
void get_list(const Tree& sec, const char* key, std::vector<T>& out, const std::string& where) {
    const auto v = sec.get_optional<std::string>(key);
    if (!v) return;
    std::vector<T> items;
    std::stringstream ss(*v);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::istringstream in(cell);
        T parsed{};
        if constexpr (std::is_same_v<T, std::string>) {
            in >> parsed;
        } else {
            in >> parsed;
            if (in.fail()) throw ConfigError("[" + where + "] " + key + ": cannot parse '" + cell + "'");
        }
        in >> std::ws;
        if (!in.eof()) throw ConfigError("[" + where + "] " + key + ": bad list item '" + cell + "'");
        items.push_back(parsed);
    }
    out = std::move(items);
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? "," : "") << xs[i];
    return out.str();
}

inline std::string num(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

}  // namespace trace::ini
