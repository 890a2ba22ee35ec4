#pragma once

#include <span>
#include <vector>

#include "trace/losses.hpp"
#include "trace/tensor_nn.hpp"

namespace trace {

/// A visible window of one sample: its eta and clamped class likelihoods.
struct VisibleWindow {
    double eta = 0.0;
    double lik0 = 0.5;
    double lik1 = 0.5;
};

/// Everything the TRACE objective needs for one sample. Only the static
/// logits depend on the trainable parameters; the rest are constants.
struct TraceExample {
    double logit0 = 0.0;
    double logit1 = 0.0;
    double score0 = 0.0;  // log g(xi | x, y=0)
    double score1 = 0.0;  // log g(xi | x, y=1)
    std::vector<VisibleWindow> windows;
    bool revealed = false;
    /// Revealed samples enter the supervised term only when set.
    bool supervise = true;
    int label = 0;  // meaningful only when revealed
    double completer_q = 0.5;
    double kappa = 0.0;
};

/// Posterior the supervised term scores revealed samples with. kFused
/// conditions on the trajectory at reveal time. kStatic scores the static
/// intent alone and stays calibrated when positives reveal early with
/// partial trajectories.
enum class SupervisedPosterior { kStatic, kFused };

struct TraceObjectiveConfig {
    double lambda = 0.1;
    SupervisedPosterior supervised = SupervisedPosterior::kStatic;
    GateConfig gate;
    bool use_trajectory = true;  // false: fused posterior collapses to static intent and L_trj is dropped
    bool use_gate = true;        // false: w_i = 1
};

struct ObjectiveResult {
    LossBreakdown breakdown;
    Matrix logit_grad;          // n x 2, d total / d (logit0, logit1)
    std::vector<double> p1;     // posterior used for prediction and consistency
    std::vector<double> gates;  // w_i for unrevealed samples, 0 for revealed
};

/// Gates are computed from the detached online probability. Pass
/// `fixed_gates` to evaluate the objective with previously computed gates
/// held constant (finite-difference checks do this).
ObjectiveResult trace_objective(std::span<const TraceExample> batch, const TraceObjectiveConfig& cfg,
                                const std::vector<double>* fixed_gates = nullptr);

/// One sample for a cross-entropy backbone (Vanilla trains on the observed
/// label, Oracle on the ground truth).
struct BceExample {
    double logit0 = 0.0;
    double logit1 = 0.0;
    int label = 0;
    bool revealed = false;
    double completer_q = 0.5;
    double kappa = 0.0;
};

struct PluginConfig {
    double lambda = 0.0;  // 0 disables the consistency term
    GateConfig gate;
    bool use_gate = true;
};

/// Backbone BCE (reported as l_sup) plus lambda * L_con over unrevealed samples.
ObjectiveResult bce_objective(std::span<const BceExample> batch, const PluginConfig& plugin,
                              const std::vector<double>* fixed_gates = nullptr);

}  // namespace trace
