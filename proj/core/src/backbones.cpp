#include "trace/backbones.hpp"

#include <algorithm>
#include <iterator>
#include <stdexcept>

namespace trace {

namespace {

std::vector<double> static_p1(const StaticIntent& theta, std::span<const FeatureVector> xs) {
    const Matrix logits = theta.net().infer(StaticIntent::encode(xs));
    std::vector<double> p(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        p[i] = sigmoid(logits(r, 1) - logits(r, 0));
    }
    return p;
}

std::vector<FeatureVector> features_of(std::span<const StreamSample> batch) {
    std::vector<FeatureVector> xs;
    xs.reserve(batch.size());
    for (const auto& s : batch) xs.push_back(s.x);
    return xs;
}

/// Completer posteriors for the unrevealed samples, 0.5 for the rest.
std::vector<double> completer_targets(const Completer* phi, std::span<const StreamSample> batch) {
    std::vector<double> q(batch.size(), 0.5);
    if (!phi) return q;
    std::vector<FeatureVector> xs;
    std::vector<TrajectoryView> views;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i].revealed) continue;
        xs.push_back(batch[i].x);
        views.push_back(batch[i].trajectory);
        where.push_back(i);
    }
    if (where.empty()) return q;
    const auto post = phi->posteriors(xs, views);
    for (std::size_t j = 0; j < where.size(); ++j) q[where[j]] = post[j];
    return q;
}

template <class Fn>
std::vector<LossBreakdown> for_minibatches(std::span<const StreamSample> batch, int size, Fn&& fn) {
    if (size <= 0) throw std::invalid_argument("batch_size must be positive");
    std::vector<LossBreakdown> out;
    for (std::size_t lo = 0; lo < batch.size(); lo += static_cast<std::size_t>(size)) {
        const auto len = std::min(batch.size() - lo, static_cast<std::size_t>(size));
        out.push_back(fn(batch.subspan(lo, len)));
    }
    return out;
}

double mean_bce(std::span<const StreamSample> batch, const StaticIntent& model, bool truth) {
    if (batch.empty()) return 0.0;
    const Matrix logits = model.net().infer(StaticIntent::encode(features_of(batch)));
    double s = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        int y = batch[i].label;
        if (truth) {
            if (!batch[i].ground_truth) throw std::invalid_argument("oracle_loss: sample without ground truth");
            y = *batch[i].ground_truth;
        }
        const auto r = static_cast<Eigen::Index>(i);
        const double margin = logits(r, 1) - logits(r, 0);
        s -= y ? log_sigmoid(margin) : log_sigmoid(-margin);
    }
    return s / static_cast<double>(batch.size());
}

}  // namespace

TraceBackbone::TraceBackbone(StaticIntent theta, std::shared_ptr<const TrajectoryLikelihood> psi,
                             std::shared_ptr<const Completer> phi, WindowWeights eta, TraceBackboneConfig cfg)
    : theta_(std::move(theta)),
      psi_(std::move(psi)),
      phi_(std::move(phi)),
      eta_(std::move(eta)),
      cfg_(cfg),
      opt_(OptimizerState::for_net(theta_.net(), cfg.adam)) {
    cfg_.objective.gate.validate();
    if (cfg_.objective.lambda < 0) throw std::invalid_argument("TraceBackbone: lambda must be non-negative");
    if (cfg_.objective.use_trajectory && !psi_) throw std::invalid_argument("TraceBackbone: trajectory model missing");
    if (cfg_.objective.lambda > 0 && !phi_) throw std::invalid_argument("TraceBackbone: completer missing");
    if (psi_ && psi_->windows() != eta_.windows()) throw std::invalid_argument("TraceBackbone: window count mismatch");
}

const LikelihoodTable& TraceBackbone::table(const StreamSample& s) {
    if (s.index >= cache_.size()) {
        cache_.resize(s.index + 1);
        cached_.resize(s.index + 1, false);
    }
    if (!cached_[s.index]) {
        cache_[s.index] = psi_->table(s.x);
        cached_[s.index] = true;
    }
    return cache_[s.index];
}

std::vector<double> TraceBackbone::predict(std::span<const FeatureVector> xs, std::span<const TrajectoryView> views) {
    auto p = static_p1(theta_, xs);
    if (!cfg_.objective.use_trajectory) return p;
    const double eps = cfg_.objective.gate.epsilon;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (views[i].empty()) continue;
        const auto t = psi_->table(xs[i]);
        const Posterior prior{1.0 - p[i], p[i]};
        p[i] = fuse(prior, trajectory_score(t, views[i], 0, eta_, eps), trajectory_score(t, views[i], 1, eta_, eps)).p1;
    }
    return p;
}

std::vector<TraceExample> TraceBackbone::examples(std::span<const StreamSample> batch, const Matrix& logits) {
    const auto& ocfg = cfg_.objective;
    const auto q = completer_targets(ocfg.lambda > 0 ? phi_.get() : nullptr, batch);
    std::vector<TraceExample> ex(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& s = batch[i];
        auto& e = ex[i];
        const auto r = static_cast<Eigen::Index>(i);
        e.logit0 = logits(r, 0);
        e.logit1 = logits(r, 1);
        e.revealed = s.revealed;
        e.supervise = s.newly_revealed;
        e.label = s.label;
        e.completer_q = q[i];
        e.kappa = s.trajectory.kappa;
        if (!ocfg.use_trajectory || s.trajectory.empty()) continue;
        const auto& t = table(s);
        for (int h = 0; s.advanced && h < s.trajectory.windows; ++h) {
            if (!s.trajectory.mask[static_cast<std::size_t>(h)]) continue;
            const auto row = s.trajectory.row(h);
            e.windows.push_back({eta_.eta[static_cast<std::size_t>(h)], t.window_likelihood(h, 0, row),
                                 t.window_likelihood(h, 1, row)});
        }
        e.score0 = trajectory_score(t, s.trajectory, 0, eta_, ocfg.gate.epsilon);
        e.score1 = trajectory_score(t, s.trajectory, 1, eta_, ocfg.gate.epsilon);
    }
    return ex;
}

std::vector<LossBreakdown> TraceBackbone::update(std::span<const StreamSample> batch) {
    return for_minibatches(batch, cfg_.batch_size, [&](std::span<const StreamSample> mb) {
        const auto xs = features_of(mb);
        const Matrix logits = theta_.net().forward(StaticIntent::encode(xs));
        const auto ex = examples(mb, logits);
        const auto res = trace_objective(ex, cfg_.objective);
        adam_step(theta_.net(), theta_.net().backward(res.logit_grad), opt_);
        return res.breakdown;
    });
}

BceBackbone::BceBackbone(std::string name, LabelSource labels, StaticIntent theta, std::shared_ptr<const Completer> phi,
                         BceBackboneConfig cfg)
    : name_(std::move(name)),
      labels_(labels),
      theta_(std::move(theta)),
      phi_(std::move(phi)),
      cfg_(cfg),
      opt_(OptimizerState::for_net(theta_.net(), cfg.adam)) {
    cfg_.plugin.gate.validate();
    if (cfg_.plugin.lambda < 0) throw std::invalid_argument("BceBackbone: lambda must be non-negative");
    if (cfg_.plugin.lambda > 0 && !phi_) throw std::invalid_argument("BceBackbone: plug-in needs a completer");
}

std::vector<double> BceBackbone::predict(std::span<const FeatureVector> xs, std::span<const TrajectoryView>) {
    return static_p1(theta_, xs);
}

std::vector<LossBreakdown> BceBackbone::update(std::span<const StreamSample> batch) {
    // Ground-truth labels never change, so the oracle skips appearances that
    // only report a revelation.
    std::vector<StreamSample> kept;
    if (labels_ == LabelSource::kGroundTruth) {
        std::copy_if(batch.begin(), batch.end(), std::back_inserter(kept), [](const auto& s) { return s.advanced; });
        batch = kept;
    }
    return for_minibatches(batch, cfg_.batch_size, [&](std::span<const StreamSample> mb) {
        const auto xs = features_of(mb);
        const Matrix logits = theta_.net().forward(StaticIntent::encode(xs));
        const auto q = completer_targets(cfg_.plugin.lambda > 0 ? phi_.get() : nullptr, mb);
        std::vector<BceExample> ex(mb.size());
        for (std::size_t i = 0; i < mb.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            auto& e = ex[i];
            e.logit0 = logits(r, 0);
            e.logit1 = logits(r, 1);
            if (labels_ == LabelSource::kGroundTruth) {
                if (!mb[i].ground_truth) throw std::logic_error("BceBackbone: ground truth not provided");
                e.label = *mb[i].ground_truth;
            } else {
                e.label = mb[i].label;
            }
            e.revealed = mb[i].revealed;
            e.completer_q = q[i];
            e.kappa = mb[i].trajectory.kappa;
        }
        const auto res = bce_objective(ex, cfg_.plugin);
        adam_step(theta_.net(), theta_.net().backward(res.logit_grad), opt_);
        return res.breakdown;
    });
}

double vanilla_loss(std::span<const StreamSample> batch, const StaticIntent& model) {
    return mean_bce(batch, model, false);
}

double oracle_loss(std::span<const StreamSample> batch, const StaticIntent& model) {
    return mean_bce(batch, model, true);
}

}  // namespace trace
