#pragma once

#include <memory>
#include <span>
#include <vector>

#include "trace/backbones.hpp"
#include "trace/bundle.hpp"
#include "trace/config.hpp"
#include "trace/log_io.hpp"

namespace trace {

/// Chronological split: clicks at or before `split_end` pretrain, the rest stream.
struct LogSplit {
    std::vector<ClickEvent> pretrain;
    std::vector<ClickEvent> stream;
    Seconds split_end = 0;
};

LogSplit split_log(std::vector<ClickEvent> log, Seconds split_end);
/// Split time covering the first `fraction` of the log's click-time span.
Seconds split_time(std::span<const ClickEvent> log, double fraction);

HorizonConfig horizon_for(const LogSchema& schema, std::vector<Seconds> boundaries);

struct PretrainReport {
    FitSummary intent;
    FitSummary likelihood;
    FitSummary completer;
};

/// Pretrains the static intent, the trajectory likelihood, the window
/// weights and (unless `with_completer` is false) the completer.
ModelBundle pretrain_bundle(std::span<const ClickEvent> pretrain, const FeatureSchema& schema,
                            const HorizonConfig& horizon, const PretrainConfig& cfg, double beta, bool with_completer,
                            PretrainReport* report = nullptr);

struct BackboneOptions {
    BackboneKind kind = BackboneKind::kTrace;
    bool plugin = false;
    Ablation ablation;
    double lambda = 0.1;
    SupervisedPosterior supervised = SupervisedPosterior::kStatic;
    GateConfig gate;
    AdamConfig adam;
    int batch_size = 4096;
};

BackboneOptions backbone_options(const RunConfig& cfg);

/// Replays `log` from the bundle's split unless `cfg.start` is set: earlier
/// clicks are history, later ones are scored and trained on.
RunResult replay_from_split(std::span<const ClickEvent> log, const ModelBundle& bundle, Backbone& model,
                            StreamConfig cfg, const std::function<void(const StepRecord&)>& on_step = {});

/// Every backbone starts from the bundle's static intent. Throws
/// std::invalid_argument when the bundle lacks a model the options need.
std::unique_ptr<Backbone> make_backbone(const ModelBundle& bundle, const BackboneOptions& opts);

}  // namespace trace
