#include "trace/log_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "ini.hpp"

namespace trace {

namespace {

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

template <class T>
T parse_field(std::string_view s, const char* what) {
    T v{};
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end) {
        throw std::invalid_argument(std::string("unparseable ") + what + " '" + std::string(s) + "'");
    }
    return v;
}

std::optional<Seconds> parse_optional_ts(std::string_view s, const char* what) {
    if (s.empty()) return std::nullopt;
    return parse_field<Seconds>(s, what);
}

std::string delimiter_name(char d) {
    switch (d) {
        case ',': return "comma";
        case '\t': return "tab";
        case ';': return "semicolon";
        case '|': return "pipe";
        default: return std::string(1, d);
    }
}

char parse_delimiter(const std::string& s) {
    if (s == "comma") return ',';
    if (s == "tab") return '\t';
    if (s == "semicolon") return ';';
    if (s == "pipe") return '|';
    if (s.size() == 1) return s[0];
    throw ini::ConfigError("schema: unsupported delimiter '" + s + "'");
}

void put_ts(std::ostream& out, const std::optional<Seconds>& ts) {
    if (ts) out << *ts;
}

/// Horizon-free checks shared with validate_event: ordering against click.
void check_times(const ClickEvent& e, const LogSchema& schema) {
    if (e.conv_ts && *e.conv_ts <= e.click_ts) throw std::invalid_argument("conv_ts must be later than click_ts");
    for (std::size_t k = 0; k < e.behavior_ts.size(); ++k) {
        const auto& b = e.behavior_ts[k];
        if (b && *b <= e.click_ts) {
            throw std::invalid_argument("behavior '" + schema.behaviors[k] + "' must be later than click_ts");
        }
    }
    if (schema.purchase && e.behavior_ts[static_cast<std::size_t>(*schema.purchase)] != e.conv_ts) {
        throw std::invalid_argument("purchase timestamp must equal conv_ts");
    }
}

}  // namespace

std::size_t LogSchema::field_count() const {
    return 3 + behaviors.size() + static_cast<std::size_t>(features.numeric) +
           static_cast<std::size_t>(features.categorical);
}

LogSchema schema_for(const GeneratorSpec& spec) {
    LogSchema s;
    s.features = spec.feature_schema();
    s.behaviors = spec.behavior_names();
    s.purchase = spec.purchase_index();
    return s;
}

void save_schema(const std::filesystem::path& path, const LogSchema& schema) {
    ini::Tree root, sec;
    sec.put("delimiter", delimiter_name(schema.delimiter));
    sec.put("numeric", schema.features.numeric);
    sec.put("categorical", schema.features.categorical);
    sec.put("hash_space", schema.features.hash_space);
    sec.put("behaviors", ini::join(schema.behaviors));
    if (schema.purchase) sec.put("purchase", schema.behaviors[static_cast<std::size_t>(*schema.purchase)]);
    root.push_back({"schema", sec});
    ini::write(path, root);
}

LogSchema load_schema(const std::filesystem::path& path) {
    const auto root = ini::read(path);
    const auto* sec = ini::section(root, "schema");
    if (!sec) throw ini::ConfigError(path.string() + ": missing [schema] section");
    ini::reject_unknown(*sec, "schema", {"delimiter", "numeric", "categorical", "hash_space", "behaviors", "purchase"});
    LogSchema s;
    std::string delim = "comma", purchase;
    ini::get(*sec, "delimiter", delim, "schema");
    s.delimiter = parse_delimiter(delim);
    ini::get(*sec, "numeric", s.features.numeric, "schema");
    ini::get(*sec, "categorical", s.features.categorical, "schema");
    ini::get(*sec, "hash_space", s.features.hash_space, "schema");
    ini::get_list(*sec, "behaviors", s.behaviors, "schema");
    ini::get(*sec, "purchase", purchase, "schema");
    if (s.features.numeric < 0 || s.features.categorical < 0 || s.features.hash_space == 0) {
        throw ini::ConfigError(path.string() + ": feature counts must be non-negative and hash_space positive");
    }
    if (s.behaviors.empty()) throw ini::ConfigError(path.string() + ": at least one behavior is required");
    if (!purchase.empty()) {
        const auto it = std::find(s.behaviors.begin(), s.behaviors.end(), purchase);
        if (it == s.behaviors.end()) throw ini::ConfigError(path.string() + ": purchase '" + purchase + "' is not a behavior");
        s.purchase = static_cast<int>(it - s.behaviors.begin());
    }
    return s;
}

void write_log(std::ostream& out, std::span<const ClickEvent> log, const LogSchema& schema) {
    const char d = schema.delimiter;
    char buf[32];
    for (const auto& e : log) {
        out << e.sample_id << d << e.click_ts << d;
        put_ts(out, e.conv_ts);
        for (const auto& b : e.behavior_ts) {
            out << d;
            put_ts(out, b);
        }
        for (double x : e.features.numeric) {
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out << d << buf;
        }
        for (auto c : e.features.categorical) out << d << c;
        out << '\n';
    }
}

void write_log(const std::filesystem::path& path, std::span<const ClickEvent> log, const LogSchema& schema) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_log(out, log, schema);
}

IngestResult ingest(std::istream& in, const LogSchema& schema) {
    IngestResult r;
    std::unordered_set<std::int64_t> seen;
    std::string line;
    std::size_t line_no = 0;
    const auto K = schema.behaviors.size();
    const auto n_num = static_cast<std::size_t>(schema.features.numeric);
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        try {
            const auto f = split(line, schema.delimiter);
            if (f.size() != schema.field_count()) {
                throw std::invalid_argument("expected " + std::to_string(schema.field_count()) + " fields, found " +
                                            std::to_string(f.size()));
            }
            ClickEvent e;
            e.sample_id = parse_field<std::int64_t>(f[0], "sample_id");
            e.click_ts = parse_field<Seconds>(f[1], "click_ts");
            e.conv_ts = parse_optional_ts(f[2], "conv_ts");
            for (std::size_t k = 0; k < K; ++k) e.behavior_ts.push_back(parse_optional_ts(f[3 + k], "behavior timestamp"));
            for (std::size_t j = 0; j < n_num; ++j) {
                const double x = parse_field<double>(f[3 + K + j], "numeric feature");
                e.features.numeric.push_back(x);
            }
            for (std::size_t j = 3 + K + n_num; j < f.size(); ++j) {
                e.features.categorical.push_back(parse_field<std::uint32_t>(f[j], "categorical feature"));
            }
            schema.features.check(e.features);
            check_times(e, schema);
            if (!seen.insert(e.sample_id).second) {
                throw std::invalid_argument("duplicate sample_id " + std::to_string(e.sample_id));
            }
            r.log.push_back(std::move(e));
        } catch (const std::invalid_argument& err) {
            r.rejected.push_back({line_no, err.what()});
        }
    }
    if (line_no == 0) r.warnings.emplace_back("empty log");
    std::stable_sort(r.log.begin(), r.log.end(), [](const ClickEvent& a, const ClickEvent& b) {
        return a.click_ts != b.click_ts ? a.click_ts < b.click_ts : a.sample_id < b.sample_id;
    });
    return r;
}

IngestResult ingest(const std::filesystem::path& path, const LogSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return ingest(in, schema);
}

void write_truth(std::ostream& out, std::span<const TruthRecord> truth) {
    out << kTruthHeader << '\n';
    char buf[32];
    for (const auto& t : truth) {
        std::snprintf(buf, sizeof buf, "%.17g", t.p_star);
        out << t.sample_id << ',' << buf << ',' << t.y << ',';
        put_ts(out, t.delay);
        out << '\n';
    }
}

void write_truth(const std::filesystem::path& path, std::span<const TruthRecord> truth) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_truth(out, truth);
}

std::vector<TruthRecord> read_truth(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTruthHeader) throw std::runtime_error("truth table: missing header");
    std::vector<TruthRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto f = split(line, ',');
            if (f.size() != 4) throw std::invalid_argument("expected 4 fields");
            TruthRecord t;
            t.sample_id = parse_field<std::int64_t>(f[0], "sample_id");
            t.p_star = parse_field<double>(f[1], "p_star");
            t.y = parse_field<int>(f[2], "y");
            t.delay = parse_optional_ts(f[3], "delay");
            out.push_back(t);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("truth table line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<TruthRecord> read_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_truth(in);
}

}  // namespace trace
