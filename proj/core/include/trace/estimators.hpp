#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trace/event_model.hpp"
#include "trace/losses.hpp"
#include "trace/tensor_nn.hpp"
#include "trace/window_weights.hpp"

namespace trace {

/// Likelihoods are clamped to [kLikelihoodFloor, 1 - kLikelihoodFloor] before logs.
inline constexpr double kLikelihoodFloor = 1e-6;

struct ModelShape {
    std::vector<int> hidden{256, 256, 128};
    int embedding_dim = 8;
};

/// Static intent p_theta(y | x): two-logit softmax over pre-click features.
class StaticIntent {
public:
    StaticIntent(const FeatureSchema& schema, const ModelShape& shape, std::uint64_t seed);
    explicit StaticIntent(DenseNet net);

    DenseNet& net() { return net_; }
    const DenseNet& net() const { return net_; }

    static InputBatch encode(std::span<const FeatureVector> xs) { return InputBatch::from_features(xs); }

private:
    DenseNet net_;
};

Posterior posterior_from_logits(double logit0, double logit1);
Posterior static_posterior(const StaticIntent& m, const FeatureVector& x);

/// Per-sample Bernoulli probabilities p_k(x, h, y) for every window and class.
struct LikelihoodTable {
    int windows = 0;
    int behaviors = 0;
    std::vector<double> probs;  // [y][h][k]

    double prob(int y, int h, int k) const {
        return probs[static_cast<std::size_t>((y * windows + h) * behaviors + k)];
    }
    /// Clamped product prod_k p^o (1-p)^(1-o) for window h under class y.
    double window_likelihood(int h, int y, std::span<const std::uint8_t> state) const;
};

/// Dynamic trajectory likelihood p_psi(o_h | x, y): one shared network fed
/// [x, one-hot(h), one-hot(y)] emitting one logit per behavior.
class TrajectoryLikelihood {
public:
    TrajectoryLikelihood(const FeatureSchema& schema, const HorizonConfig& horizon, const ModelShape& shape,
                         std::uint64_t seed);
    TrajectoryLikelihood(DenseNet net, int windows, int behaviors);

    int windows() const { return windows_; }
    int behaviors() const { return behaviors_; }

    const DenseNet& net() const { return net_; }
    /// Throws std::logic_error once frozen.
    DenseNet& mutable_net();
    bool frozen() const { return frozen_; }
    void freeze() { frozen_ = true; }

    InputBatch encode(std::span<const FeatureVector> xs, std::span<const int> window, std::span<const int> label) const;
    LikelihoodTable table(const FeatureVector& x) const;
    std::vector<LikelihoodTable> tables(std::span<const FeatureVector> xs) const;

private:
    DenseNet net_;
    int windows_ = 0;
    int behaviors_ = 0;
    bool frozen_ = false;
};

/// h is 0-based here.
double window_likelihood(const TrajectoryLikelihood& t, const FeatureVector& x, int h, int y,
                         std::span<const std::uint8_t> state);

/// sum_h alpha_h log p_psi(o_h | x, y); 0 for an empty mask. Ignores the
/// states of masked-out windows.
double trajectory_score(const LikelihoodTable& table, const TrajectoryView& v, int y, const WindowWeights& w,
                        double epsilon = 1e-8);
double trajectory_score(const TrajectoryLikelihood& t, const FeatureVector& x, const TrajectoryView& v, int y,
                        const WindowWeights& w, double epsilon = 1e-8);

/// Softmax over y of log prior(y) + score_y.
Posterior fuse(Posterior prior, double score0, double score1);
Posterior fused_posterior(const StaticIntent& m, const TrajectoryLikelihood& t, const FeatureVector& x,
                          const TrajectoryView& v, const WindowWeights& w, double epsilon = 1e-8);

/// Retrospective completer q_phi(y=1 | x, xi): [x, masked states, mask,
/// horizon embedding of the visible-window count] -> one sigmoid logit.
class Completer {
public:
    Completer(const FeatureSchema& schema, const HorizonConfig& horizon, const ModelShape& shape, std::uint64_t seed);
    Completer(DenseNet net, int windows, int behaviors);

    int windows() const { return windows_; }
    int behaviors() const { return behaviors_; }

    const DenseNet& net() const { return net_; }
    DenseNet& mutable_net();
    bool frozen() const { return frozen_; }
    void freeze() { frozen_ = true; }

    /// Throws std::invalid_argument on a non-prefix mask.
    InputBatch encode(std::span<const FeatureVector> xs, std::span<const TrajectoryView> views) const;
    std::vector<double> posteriors(std::span<const FeatureVector> xs, std::span<const TrajectoryView> views) const;

private:
    DenseNet net_;
    int windows_ = 0;
    int behaviors_ = 0;
    bool frozen_ = false;
};

double completer_posterior(const Completer& c, const FeatureVector& x, const TrajectoryView& v);

}  // namespace trace
