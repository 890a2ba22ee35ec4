#pragma once

#include <filesystem>
#include <memory>

#include "trace/estimators.hpp"
#include "trace/event_model.hpp"
#include "trace/window_weights.hpp"

namespace trace {

/// Everything pretraining produces for the streaming phase.
struct ModelBundle {
    FeatureSchema schema;
    HorizonConfig horizon;
    StaticIntent intent;
    std::shared_ptr<const TrajectoryLikelihood> likelihood;
    /// Null when pretrained without the completer.
    std::shared_ptr<const Completer> completer;
    WindowWeights window_weights;
    /// Last click time of the pretraining split.
    Seconds split_end = 0;
};

inline constexpr const char* kManifestName = "manifest.json";

/// Writes manifest.json, one checkpoint per model and window_weights.txt.
void save_bundle(const std::filesystem::path& dir, const ModelBundle& bundle);
/// Loaded likelihood and completer models are frozen. Throws
/// std::runtime_error on a missing or inconsistent bundle.
ModelBundle load_bundle(const std::filesystem::path& dir);

}  // namespace trace
