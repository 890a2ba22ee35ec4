#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trace/estimators.hpp"
#include "trace/losses.hpp"
#include "trace/objective.hpp"
#include "trace/pretraining.hpp"
#include "trace/streaming.hpp"
#include "trace/tensor_nn.hpp"

namespace trace {

enum class BackboneKind { kTrace, kVanilla, kOracle };

struct Ablation {
    bool no_traj = false;
    bool no_retro = false;
    bool no_gate = false;
};

/// Everything a run needs, readable from an INI file with sections
/// [data], [horizon], [model], [optim], [pretrain], [stream], [trace], [run].
struct RunConfig {
    // [data]
    std::filesystem::path log;
    std::filesystem::path schema;
    std::filesystem::path truth;
    std::filesystem::path bundle;

    // [horizon]; behaviors come from the log schema
    std::vector<Seconds> boundaries{120, 600, 7200, 86400, 259200};

    // [model]
    ModelShape shape;

    // [optim]
    AdamConfig adam;
    int batch_size = 4096;

    // [pretrain]
    int epochs = 5;
    int patience = 2;
    double holdout_fraction = 0.1;
    int truncation_min_k = 0;
    double beta = 2.0;
    /// Clicks at or before this time form the pretraining split; by
    /// default the first `pretrain_fraction` of the log's time span.
    std::optional<Seconds> split;
    double pretrain_fraction = 0.3;
    std::uint64_t seed = 1;

    // [stream]
    Seconds delta = 3600;
    bool full_prefix = false;
    bool revisit_revealed = true;
    bool shuffle = true;

    // [trace]
    double lambda = 0.1;
    SupervisedPosterior supervised = SupervisedPosterior::kStatic;
    GateConfig gate;

    // [run]
    BackboneKind backbone = BackboneKind::kTrace;
    bool plugin = false;
    Ablation ablation;
    std::filesystem::path output = "out";
    std::string log_level = "info";

    /// Throws std::invalid_argument naming the offending key.
    void validate() const;

    PretrainConfig pretrain_config() const;
    StreamConfig stream_config() const;
};

/// Defaults overridden by every key present in the file. Unknown keys are
/// rejected. Relative paths resolve against the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

BackboneKind parse_backbone(const std::string& name);
/// Accepts "static" and "fused".
SupervisedPosterior parse_supervised(const std::string& name);
std::string backbone_name(BackboneKind kind);
/// Accepts "no_traj", "no_retro" and "no_gate".
void apply_ablation(Ablation& a, const std::string& name);

/// Name used in reports, e.g. "trace", "trace-no_gate", "vanilla+con".
std::string method_name(BackboneKind kind, bool plugin, const Ablation& a);

}  // namespace trace
