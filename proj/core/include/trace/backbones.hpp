#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "trace/estimators.hpp"
#include "trace/objective.hpp"
#include "trace/streaming.hpp"
#include "trace/tensor_nn.hpp"
#include "trace/window_weights.hpp"

namespace trace {

struct TraceBackboneConfig {
    std::string name = "trace";
    TraceObjectiveConfig objective;
    AdamConfig adam;
    int batch_size = 4096;
};

/// Streams the static intent under the TRACE objective. The likelihood
/// model and the completer are shared, read-only and never updated.
class TraceBackbone final : public Backbone {
public:
    /// `psi` may be null only without the trajectory term, `phi` only when
    /// lambda is 0. Throws std::invalid_argument otherwise.
    TraceBackbone(StaticIntent theta, std::shared_ptr<const TrajectoryLikelihood> psi,
                  std::shared_ptr<const Completer> phi, WindowWeights eta, TraceBackboneConfig cfg);

    std::string name() const override { return cfg_.name; }
    std::vector<double> predict(std::span<const FeatureVector> xs, std::span<const TrajectoryView> views) override;
    std::vector<LossBreakdown> update(std::span<const StreamSample> batch) override;

    const StaticIntent& intent() const { return theta_; }
    const TraceBackboneConfig& config() const { return cfg_; }

    /// Objective inputs for a mini-batch with the given static logits.
    std::vector<TraceExample> examples(std::span<const StreamSample> batch, const Matrix& logits);

private:
    const LikelihoodTable& table(const StreamSample& s);

    StaticIntent theta_;
    std::shared_ptr<const TrajectoryLikelihood> psi_;
    std::shared_ptr<const Completer> phi_;
    WindowWeights eta_;
    TraceBackboneConfig cfg_;
    OptimizerState opt_;
    std::vector<LikelihoodTable> cache_;
    std::vector<bool> cached_;
};

enum class LabelSource { kObserved, kGroundTruth };

struct BceBackboneConfig {
    PluginConfig plugin;
    AdamConfig adam;
    int batch_size = 4096;
};

/// Cross-entropy backbone: Vanilla trains on the label known at the clock
/// (unrevealed samples count as negatives), Oracle on the ground truth.
/// A positive plugin lambda adds the gated consistency term.
class BceBackbone final : public Backbone {
public:
    BceBackbone(std::string name, LabelSource labels, StaticIntent theta, std::shared_ptr<const Completer> phi,
                BceBackboneConfig cfg);

    std::string name() const override { return name_; }
    bool reads_ground_truth() const override { return labels_ == LabelSource::kGroundTruth; }
    std::vector<double> predict(std::span<const FeatureVector> xs, std::span<const TrajectoryView> views) override;
    std::vector<LossBreakdown> update(std::span<const StreamSample> batch) override;

    const StaticIntent& intent() const { return theta_; }

private:
    std::string name_;
    LabelSource labels_;
    StaticIntent theta_;
    std::shared_ptr<const Completer> phi_;
    BceBackboneConfig cfg_;
    OptimizerState opt_;
};

/// Mean BCE of the static intent against the label known at the clock.
double vanilla_loss(std::span<const StreamSample> batch, const StaticIntent& model);
/// Mean BCE against the ground truth. Throws if a sample lacks it.
double oracle_loss(std::span<const StreamSample> batch, const StaticIntent& model);

}  // namespace trace
