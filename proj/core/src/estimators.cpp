#include "trace/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trace {

namespace {

std::vector<EmbeddingSpec> feature_embeddings(const FeatureSchema& schema, int dim) {
    return std::vector<EmbeddingSpec>(static_cast<std::size_t>(schema.categorical),
                                      EmbeddingSpec{static_cast<int>(schema.hash_space), dim});
}

double clamp_likelihood(double v) { return std::clamp(v, kLikelihoodFloor, 1.0 - kLikelihoodFloor); }

}  // namespace

StaticIntent::StaticIntent(const FeatureSchema& schema, const ModelShape& shape, std::uint64_t seed)
    : net_(NetSpec{schema.numeric, feature_embeddings(schema, shape.embedding_dim), shape.hidden, 2}, seed) {}

StaticIntent::StaticIntent(DenseNet net) : net_(std::move(net)) {
    if (net_.spec().outputs != 2) throw std::invalid_argument("StaticIntent: network must emit two logits");
}

Posterior posterior_from_logits(double logit0, double logit1) {
    const double p1 = sigmoid(logit1 - logit0);
    return {1.0 - p1, p1};
}

Posterior static_posterior(const StaticIntent& m, const FeatureVector& x) {
    const Matrix logits = m.net().infer(StaticIntent::encode({&x, 1}));
    return posterior_from_logits(logits(0, 0), logits(0, 1));
}

double LikelihoodTable::window_likelihood(int h, int y, std::span<const std::uint8_t> state) const {
    double lik = 1.0;
    for (int k = 0; k < behaviors; ++k) {
        const double p = prob(y, h, k);
        lik *= state[static_cast<std::size_t>(k)] ? p : 1.0 - p;
    }
    return clamp_likelihood(lik);
}

TrajectoryLikelihood::TrajectoryLikelihood(const FeatureSchema& schema, const HorizonConfig& horizon,
                                           const ModelShape& shape, std::uint64_t seed)
    : net_(NetSpec{schema.numeric + horizon.windows() + 2, feature_embeddings(schema, shape.embedding_dim),
                   shape.hidden, horizon.behaviors()},
           seed),
      windows_(horizon.windows()),
      behaviors_(horizon.behaviors()) {}

TrajectoryLikelihood::TrajectoryLikelihood(DenseNet net, int windows, int behaviors)
    : net_(std::move(net)), windows_(windows), behaviors_(behaviors) {
    if (net_.spec().outputs != behaviors) {
        throw std::invalid_argument("TrajectoryLikelihood: output count must equal behavior count");
    }
}

DenseNet& TrajectoryLikelihood::mutable_net() {
    if (frozen_) throw std::logic_error("TrajectoryLikelihood is frozen");
    return net_;
}

InputBatch TrajectoryLikelihood::encode(std::span<const FeatureVector> xs, std::span<const int> window,
                                        std::span<const int> label) const {
    if (xs.size() != window.size() || xs.size() != label.size()) {
        throw std::invalid_argument("TrajectoryLikelihood::encode: length mismatch");
    }
    InputBatch b = InputBatch::from_features(xs);
    const auto base = b.numeric.cols();
    b.numeric.conservativeResize(Eigen::NoChange, base + windows_ + 2);
    b.numeric.rightCols(windows_ + 2).setZero();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (window[i] < 0 || window[i] >= windows_ || (label[i] != 0 && label[i] != 1)) {
            throw std::invalid_argument("TrajectoryLikelihood::encode: window or label out of range");
        }
        const auto row = static_cast<Eigen::Index>(i);
        b.numeric(row, base + window[i]) = 1.0;
        b.numeric(row, base + windows_ + label[i]) = 1.0;
    }
    return b;
}

std::vector<LikelihoodTable> TrajectoryLikelihood::tables(std::span<const FeatureVector> xs) const {
    const std::size_t per = static_cast<std::size_t>(2 * windows_);
    std::vector<FeatureVector> rep;
    std::vector<int> hs, ys;
    rep.reserve(xs.size() * per);
    for (const auto& x : xs) {
        for (int y = 0; y < 2; ++y) {
            for (int h = 0; h < windows_; ++h) {
                rep.push_back(x);
                hs.push_back(h);
                ys.push_back(y);
            }
        }
    }
    const Matrix logits = net_.infer(encode(rep, hs, ys));
    std::vector<LikelihoodTable> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        auto& t = out[i];
        t.windows = windows_;
        t.behaviors = behaviors_;
        t.probs.resize(per * static_cast<std::size_t>(behaviors_));
        for (std::size_t r = 0; r < per; ++r) {
            for (int k = 0; k < behaviors_; ++k) {
                t.probs[r * static_cast<std::size_t>(behaviors_) + static_cast<std::size_t>(k)] =
                    sigmoid(logits(static_cast<Eigen::Index>(i * per + r), k));
            }
        }
    }
    return out;
}

LikelihoodTable TrajectoryLikelihood::table(const FeatureVector& x) const { return tables({&x, 1}).front(); }

double window_likelihood(const TrajectoryLikelihood& t, const FeatureVector& x, int h, int y,
                         std::span<const std::uint8_t> state) {
    if (static_cast<int>(state.size()) != t.behaviors()) {
        throw std::invalid_argument("window_likelihood: state width does not match behavior count");
    }
    return t.table(x).window_likelihood(h, y, state);
}

double trajectory_score(const LikelihoodTable& table, const TrajectoryView& v, int y, const WindowWeights& w,
                        double epsilon) {
    if (v.windows != table.windows || w.windows() != v.windows) {
        throw std::invalid_argument("trajectory_score: window count mismatch");
    }
    const auto alpha = alpha_weights(v.mask, w.eta, epsilon);
    double score = 0.0;
    for (int h = 0; h < v.windows; ++h) {
        if (!v.mask[static_cast<std::size_t>(h)]) continue;
        score += alpha[static_cast<std::size_t>(h)] * std::log(table.window_likelihood(h, y, v.row(h)));
    }
    return score;
}

double trajectory_score(const TrajectoryLikelihood& t, const FeatureVector& x, const TrajectoryView& v, int y,
                        const WindowWeights& w, double epsilon) {
    if (v.empty()) return 0.0;
    return trajectory_score(t.table(x), v, y, w, epsilon);
}

Posterior fuse(Posterior prior, double score0, double score1) {
    const double p1 = sigmoid((std::log(prior.p1) + score1) - (std::log(prior.p0) + score0));
    return {1.0 - p1, p1};
}

Posterior fused_posterior(const StaticIntent& m, const TrajectoryLikelihood& t, const FeatureVector& x,
                          const TrajectoryView& v, const WindowWeights& w, double epsilon) {
    const Matrix logits = m.net().infer(StaticIntent::encode({&x, 1}));
    const double a0 = logits(0, 0), a1 = logits(0, 1);
    if (v.empty()) return posterior_from_logits(a0, a1);
    const auto table = t.table(x);
    const double s0 = trajectory_score(table, v, 0, w, epsilon);
    const double s1 = trajectory_score(table, v, 1, w, epsilon);
    const double p1 = sigmoid((a1 + s1) - (a0 + s0));
    return {1.0 - p1, p1};
}

Completer::Completer(const FeatureSchema& schema, const HorizonConfig& horizon, const ModelShape& shape,
                     std::uint64_t seed)
    : windows_(horizon.windows()), behaviors_(horizon.behaviors()) {
    auto embeddings = feature_embeddings(schema, shape.embedding_dim);
    // Horizon embedding e_k, k = 0..H visible windows.
    embeddings.push_back({windows_ + 1, windows_});
    net_ = DenseNet(
        NetSpec{schema.numeric + windows_ * behaviors_ + windows_, std::move(embeddings), shape.hidden, 1}, seed);
}

Completer::Completer(DenseNet net, int windows, int behaviors)
    : net_(std::move(net)), windows_(windows), behaviors_(behaviors) {
    if (net_.spec().outputs != 1) throw std::invalid_argument("Completer: network must emit one logit");
}

DenseNet& Completer::mutable_net() {
    if (frozen_) throw std::logic_error("Completer is frozen");
    return net_;
}

InputBatch Completer::encode(std::span<const FeatureVector> xs, std::span<const TrajectoryView> views) const {
    if (xs.size() != views.size()) throw std::invalid_argument("Completer::encode: length mismatch");
    InputBatch b = InputBatch::from_features(xs);
    const auto base = b.numeric.cols();
    const auto cat = b.categorical.cols();
    const int state_cols = windows_ * behaviors_;
    b.numeric.conservativeResize(Eigen::NoChange, base + state_cols + windows_);
    b.categorical.conservativeResize(Eigen::NoChange, cat + 1);
    for (std::size_t i = 0; i < views.size(); ++i) {
        const auto& v = views[i];
        if (v.windows != windows_ || v.behaviors != behaviors_) {
            throw std::invalid_argument("Completer::encode: trajectory shape mismatch");
        }
        int visible = 0;
        for (int h = 0; h < windows_; ++h) {
            if (v.mask[static_cast<std::size_t>(h)] && visible != h) {
                throw std::invalid_argument("Completer::encode: mask is not a prefix mask");
            }
            visible += v.mask[static_cast<std::size_t>(h)];
        }
        const auto row = static_cast<Eigen::Index>(i);
        for (int s = 0; s < state_cols; ++s) b.numeric(row, base + s) = v.states[static_cast<std::size_t>(s)];
        for (int h = 0; h < windows_; ++h) b.numeric(row, base + state_cols + h) = v.mask[static_cast<std::size_t>(h)];
        b.categorical(row, cat) = static_cast<std::uint32_t>(visible);
    }
    return b;
}

std::vector<double> Completer::posteriors(std::span<const FeatureVector> xs,
                                          std::span<const TrajectoryView> views) const {
    const Matrix logits = net_.infer(encode(xs, views));
    std::vector<double> q(xs.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = sigmoid(logits(static_cast<Eigen::Index>(i), 0));
    return q;
}

double completer_posterior(const Completer& c, const FeatureVector& x, const TrajectoryView& v) {
    return c.posteriors({&x, 1}, {&v, 1}).front();
}

}  // namespace trace
