#include "trace/config.hpp"

#include <cmath>
#include <stdexcept>

#include "ini.hpp"

namespace trace {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("config: " + what);
}

std::filesystem::path anchored(const std::filesystem::path& base, const std::filesystem::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

}  // namespace

void RunConfig::validate() const {
    require(!boundaries.empty(), "horizon.boundaries must not be empty");
    for (std::size_t h = 0; h < boundaries.size(); ++h) {
        require(boundaries[h] > 0 && (h == 0 || boundaries[h] > boundaries[h - 1]),
                "horizon.boundaries must be positive and strictly increasing");
    }
    require(!shape.hidden.empty(), "model.hidden must list at least one layer");
    for (int w : shape.hidden) require(w > 0, "model.hidden sizes must be positive");
    require(shape.embedding_dim > 0, "model.embedding_dim must be positive");
    require(adam.learning_rate > 0 && std::isfinite(adam.learning_rate), "optim.learning_rate must be positive");
    require(adam.l2 >= 0, "optim.l2 must be non-negative");
    require(batch_size > 0, "optim.batch_size must be positive");
    require(epochs > 0, "pretrain.epochs must be positive");
    require(patience >= 0, "pretrain.patience must be >= 0");
    require(holdout_fraction >= 0 && holdout_fraction < 1, "pretrain.holdout must be in [0, 1)");
    require(truncation_min_k >= 0 && truncation_min_k <= static_cast<int>(boundaries.size()),
            "pretrain.truncation_min_k must be in [0, H]");
    require(beta >= 0 && std::isfinite(beta), "pretrain.beta must be >= 0");
    require(pretrain_fraction > 0 && pretrain_fraction < 1, "pretrain.fraction must be in (0, 1)");
    require(delta > 0, "stream.delta must be > 0");
    require(lambda >= 0 && std::isfinite(lambda), "trace.lambda must be >= 0");
    require(gate.slope > 0 && gate.epsilon > 0, "trace.gate_slope and trace.epsilon must be positive");
    require(!(backbone != BackboneKind::kTrace && (ablation.no_traj || ablation.no_gate)),
            "ablations no_traj and no_gate apply to the trace backbone only");
    require(!(plugin && backbone == BackboneKind::kTrace), "run.plugin applies to vanilla and oracle only");
}

PretrainConfig RunConfig::pretrain_config() const {
    PretrainConfig p;
    p.epochs = epochs;
    p.patience = patience;
    p.batch_size = batch_size;
    p.holdout_fraction = holdout_fraction;
    p.adam = adam;
    p.shape = shape;
    p.seed = seed;
    p.truncation_min_k = truncation_min_k;
    return p;
}

StreamConfig RunConfig::stream_config() const {
    StreamConfig s;
    s.delta = delta;
    s.full_prefix = full_prefix;
    s.revisit_revealed = revisit_revealed;
    s.shuffle = shuffle;
    s.seed = seed;
    return s;
}

SupervisedPosterior parse_supervised(const std::string& name) {
    if (name == "static") return SupervisedPosterior::kStatic;
    if (name == "fused") return SupervisedPosterior::kFused;
    throw std::invalid_argument("unknown supervised posterior '" + name + "' (expected static or fused)");
}

BackboneKind parse_backbone(const std::string& name) {
    if (name == "trace") return BackboneKind::kTrace;
    if (name == "vanilla") return BackboneKind::kVanilla;
    if (name == "oracle") return BackboneKind::kOracle;
    throw std::invalid_argument("unknown backbone '" + name + "' (expected trace, vanilla or oracle)");
}

std::string backbone_name(BackboneKind kind) {
    switch (kind) {
        case BackboneKind::kTrace: return "trace";
        case BackboneKind::kVanilla: return "vanilla";
        case BackboneKind::kOracle: return "oracle";
    }
    return "?";
}

void apply_ablation(Ablation& a, const std::string& name) {
    if (name == "no_traj") a.no_traj = true;
    else if (name == "no_retro") a.no_retro = true;
    else if (name == "no_gate") a.no_gate = true;
    else throw std::invalid_argument("unknown ablation '" + name + "' (expected no_traj, no_retro or no_gate)");
}

std::string method_name(BackboneKind kind, bool plugin, const Ablation& a) {
    std::string name = backbone_name(kind);
    if (plugin) name += "+con";
    if (a.no_traj) name += "-no_traj";
    if (a.no_retro) name += "-no_retro";
    if (a.no_gate) name += "-no_gate";
    return name;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const auto root = ini::read(path);
    const auto base = path.parent_path();
    RunConfig c;
    for (const auto& [name, _] : root) {
        static const std::set<std::string> sections{"data",   "horizon", "model", "optim",
                                                    "pretrain", "stream", "trace", "run"};
        if (!sections.count(name)) throw ini::ConfigError(path.string() + ": unknown section [" + name + "]");
    }
    if (const auto* s = ini::section(root, "data")) {
        ini::reject_unknown(*s, "data", {"log", "schema", "truth", "bundle"});
        std::string log, schema, truth, bundle;
        ini::get(*s, "log", log, "data");
        ini::get(*s, "schema", schema, "data");
        ini::get(*s, "truth", truth, "data");
        ini::get(*s, "bundle", bundle, "data");
        c.log = anchored(base, log);
        c.schema = anchored(base, schema);
        c.truth = anchored(base, truth);
        c.bundle = anchored(base, bundle);
    }
    if (const auto* s = ini::section(root, "horizon")) {
        ini::reject_unknown(*s, "horizon", {"boundaries"});
        ini::get_list(*s, "boundaries", c.boundaries, "horizon");
    }
    if (const auto* s = ini::section(root, "model")) {
        ini::reject_unknown(*s, "model", {"hidden", "embedding_dim"});
        ini::get_list(*s, "hidden", c.shape.hidden, "model");
        ini::get(*s, "embedding_dim", c.shape.embedding_dim, "model");
    }
    if (const auto* s = ini::section(root, "optim")) {
        ini::reject_unknown(*s, "optim", {"learning_rate", "batch_size", "l2", "beta1", "beta2", "epsilon"});
        ini::get(*s, "learning_rate", c.adam.learning_rate, "optim");
        ini::get(*s, "batch_size", c.batch_size, "optim");
        ini::get(*s, "l2", c.adam.l2, "optim");
        ini::get(*s, "beta1", c.adam.beta1, "optim");
        ini::get(*s, "beta2", c.adam.beta2, "optim");
        ini::get(*s, "epsilon", c.adam.epsilon, "optim");
    }
    if (const auto* s = ini::section(root, "pretrain")) {
        ini::reject_unknown(*s, "pretrain",
                            {"epochs", "patience", "holdout", "truncation_min_k", "beta", "split", "fraction", "seed"});
        ini::get(*s, "epochs", c.epochs, "pretrain");
        ini::get(*s, "patience", c.patience, "pretrain");
        ini::get(*s, "holdout", c.holdout_fraction, "pretrain");
        ini::get(*s, "truncation_min_k", c.truncation_min_k, "pretrain");
        ini::get(*s, "beta", c.beta, "pretrain");
        Seconds split = 0;
        if (s->get_optional<std::string>("split")) {
            ini::get(*s, "split", split, "pretrain");
            c.split = split;
        }
        ini::get(*s, "fraction", c.pretrain_fraction, "pretrain");
        ini::get(*s, "seed", c.seed, "pretrain");
    }
    if (const auto* s = ini::section(root, "stream")) {
        ini::reject_unknown(*s, "stream", {"delta", "full_prefix", "revisit_revealed", "shuffle"});
        ini::get(*s, "delta", c.delta, "stream");
        ini::get(*s, "full_prefix", c.full_prefix, "stream");
        ini::get(*s, "revisit_revealed", c.revisit_revealed, "stream");
        ini::get(*s, "shuffle", c.shuffle, "stream");
    }
    if (const auto* s = ini::section(root, "trace")) {
        ini::reject_unknown(*s, "trace", {"lambda", "supervised", "gate_slope", "gate_center", "epsilon"});
        ini::get(*s, "lambda", c.lambda, "trace");
        std::string supervised;
        ini::get(*s, "supervised", supervised, "trace");
        if (!supervised.empty()) {
            try {
                c.supervised = parse_supervised(supervised);
            } catch (const std::invalid_argument& e) {
                throw ini::ConfigError(path.string() + ": " + e.what());
            }
        }
        ini::get(*s, "gate_slope", c.gate.slope, "trace");
        ini::get(*s, "gate_center", c.gate.center, "trace");
        ini::get(*s, "epsilon", c.gate.epsilon, "trace");
    }
    if (const auto* s = ini::section(root, "run")) {
        ini::reject_unknown(*s, "run", {"backbone", "plugin", "ablate", "output", "log_level"});
        std::string backbone, output;
        ini::get(*s, "backbone", backbone, "run");
        if (!backbone.empty()) c.backbone = parse_backbone(backbone);
        ini::get(*s, "plugin", c.plugin, "run");
        std::vector<std::string> ablations;
        ini::get_list(*s, "ablate", ablations, "run");
        for (const auto& a : ablations) apply_ablation(c.ablation, a);
        ini::get(*s, "output", output, "run");
        if (!output.empty()) c.output = anchored(base, output);
        ini::get(*s, "log_level", c.log_level, "run");
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ini::ConfigError(path.string() + ": " + e.what());
    }
    return c;
}

}  // namespace trace
