#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "trace/estimators.hpp"
#include "trace/event_model.hpp"
#include "trace/tensor_nn.hpp"
#include "trace/window_weights.hpp"

namespace trace {

/// A full-lifecycle sample: features, completely observed trajectory, label.
struct LifecycleSample {
    FeatureVector x;
    TrajectoryView full;
    int label = 0;
};

std::vector<LifecycleSample> make_lifecycle_samples(std::span<const ClickEvent> log, const HorizonConfig& horizon);

struct PretrainConfig {
    int epochs = 5;
    int batch_size = 4096;
    double holdout_fraction = 0.1;
    AdamConfig adam;
    ModelShape shape;
    std::uint64_t seed = 1;
    /// Epochs without holdout improvement before stopping; the best epoch's
    /// parameters are kept.
    int patience = 2;
    /// Smallest truncation point drawn for the completer. The truncation
    /// point is uniform on {min_k, ..., H}; 0 includes the blank trajectory.
    int truncation_min_k = 0;
};

/// Training trace of one pretraining run.
struct FitSummary {
    int epochs_run = 0;
    int best_epoch = 0;
    std::vector<double> holdout_loss;
};

/// Uniform truncation point on {min_k, ..., windows}.
int draw_truncation(std::mt19937_64& rng, int windows, int min_k = 1);

/// Empirical conditional entropies of the label given each window's state.
std::vector<double> conditional_entropy_per_window(std::span<const LifecycleSample> data);

WindowWeights pretrain_window_weights(std::span<const LifecycleSample> data, double beta);

StaticIntent pretrain_static_intent(std::span<const LifecycleSample> data, const FeatureSchema& schema,
                                    const PretrainConfig& cfg, FitSummary* summary = nullptr);

/// Returned model is frozen.
TrajectoryLikelihood pretrain_trajectory_likelihood(std::span<const LifecycleSample> data,
                                                    const FeatureSchema& schema, const HorizonConfig& horizon,
                                                    const PretrainConfig& cfg, FitSummary* summary = nullptr);

/// Returned model is frozen.
Completer pretrain_completer(std::span<const LifecycleSample> data, const FeatureSchema& schema,
                             const HorizonConfig& horizon, const PretrainConfig& cfg, FitSummary* summary = nullptr);

}  // namespace trace
