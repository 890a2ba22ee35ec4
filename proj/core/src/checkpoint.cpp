#include <bit>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "trace/tensor_nn.hpp"

namespace trace {

namespace {

constexpr const char* kMagic = "TRACE-NET 1";

nlohmann::json spec_to_json(const NetSpec& s) {
    nlohmann::json emb = nlohmann::json::array();
    for (const auto& e : s.embeddings) emb.push_back({{"rows", e.rows}, {"dim", e.dim}});
    return {{"numeric_dim", s.numeric_dim}, {"embeddings", emb}, {"hidden", s.hidden}, {"outputs", s.outputs}};
}

NetSpec spec_from_json(const nlohmann::json& j) {
    NetSpec s;
    s.numeric_dim = j.at("numeric_dim").get<int>();
    for (const auto& e : j.at("embeddings")) s.embeddings.push_back({e.at("rows").get<int>(), e.at("dim").get<int>()});
    s.hidden = j.at("hidden").get<std::vector<int>>();
    s.outputs = j.at("outputs").get<int>();
    return s;
}

void write_blocks(std::ofstream& out, const std::vector<Matrix>& blocks) {
    for (const auto& m : blocks) {
        out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    }
}

void read_blocks(std::ifstream& in, std::vector<Matrix>& blocks) {
    for (auto& m : blocks) {
        in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
        if (!in) throw std::runtime_error("checkpoint: truncated parameter payload");
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DenseNet& net, const OptimizerState* opt) {
    static_assert(std::endian::native == std::endian::little, "checkpoint payload is little-endian");
    nlohmann::json header = {
        {"spec", spec_to_json(net.spec())},
        {"seed", net.seed()},
        {"param_count", net.param_count()},
        {"checksum", net.checksum()},
        {"optimizer", opt != nullptr},
    };
    if (opt) {
        header["adam"] = {{"step", opt->step},
                          {"learning_rate", opt->config.learning_rate},
                          {"beta1", opt->config.beta1},
                          {"beta2", opt->config.beta2},
                          {"epsilon", opt->config.epsilon},
                          {"l2", opt->config.l2}};
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
    out << kMagic << '\n' << header.dump() << '\n';
    write_blocks(out, net.parameters());
    if (opt) {
        write_blocks(out, opt->first_moment);
        write_blocks(out, opt->second_moment);
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

DenseNet load_checkpoint(const std::filesystem::path& path, OptimizerState* opt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
    std::string magic, header_line;
    std::getline(in, magic);
    if (magic != kMagic) throw std::runtime_error("checkpoint: bad magic in " + path.string());
    std::getline(in, header_line);
    const auto header = nlohmann::json::parse(header_line);

    DenseNet net(spec_from_json(header.at("spec")), header.at("seed").get<std::uint64_t>());
    if (net.param_count() != header.at("param_count").get<std::size_t>()) {
        throw std::runtime_error("checkpoint: parameter count mismatch");
    }
    read_blocks(in, net.parameters());
    if (net.checksum() != header.at("checksum").get<std::uint64_t>()) {
        throw std::runtime_error("checkpoint: checksum mismatch in " + path.string());
    }
    if (header.at("optimizer").get<bool>()) {
        const auto& a = header.at("adam");
        AdamConfig cfg{a.at("learning_rate").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                       a.at("epsilon").get<double>(), a.at("l2").get<double>()};
        auto state = OptimizerState::for_net(net, cfg);
        state.step = a.at("step").get<std::int64_t>();
        read_blocks(in, state.first_moment);
        read_blocks(in, state.second_moment);
        if (opt) *opt = std::move(state);
    }
    return net;
}

}  // namespace trace
