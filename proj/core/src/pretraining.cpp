#include "trace/pretraining.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "trace/losses.hpp"

namespace trace {

namespace {

struct FitTask {
    // Builds the network input for the given sample indices and fills targets.
    std::function<InputBatch(std::span<const std::size_t>, std::mt19937_64&, Matrix&)> build;
    // Mean loss of a batch; writes d loss / d logits into grad when non-null.
    std::function<double(const Matrix& logits, const Matrix& targets, Matrix* grad)> loss;
};

double softmax2_loss(const Matrix& logits, const Matrix& targets, Matrix* grad) {
    const auto n = logits.rows();
    double total = 0.0;
    if (grad) grad->setZero(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double margin = logits(i, 1) - logits(i, 0);
        const double y = targets(i, 0);
        total -= y * log_sigmoid(margin) + (1.0 - y) * log_sigmoid(-margin);
        if (grad) {
            const double g = (sigmoid(margin) - y) / static_cast<double>(n);
            (*grad)(i, 1) = g;
            (*grad)(i, 0) = -g;
        }
    }
    return total / static_cast<double>(n);
}

// Independent sigmoid cross-entropy per output column, summed over columns.
double sigmoid_loss(const Matrix& logits, const Matrix& targets, Matrix* grad) {
    const auto n = logits.rows();
    double total = 0.0;
    if (grad) grad->resize(n, logits.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < logits.cols(); ++k) {
            const double z = logits(i, k);
            const double t = targets(i, k);
            total -= t * log_sigmoid(z) + (1.0 - t) * log_sigmoid(-z);
            if (grad) (*grad)(i, k) = (sigmoid(z) - t) / static_cast<double>(n);
        }
    }
    return total / static_cast<double>(n);
}

FitSummary fit(DenseNet& net, std::size_t n, const PretrainConfig& cfg, const FitTask& task, std::uint64_t salt) {
    if (n == 0) throw std::invalid_argument("pretraining: empty data");
    if (cfg.batch_size <= 0 || cfg.epochs <= 0 || cfg.patience < 0) {
        throw std::invalid_argument("pretraining: bad batch size, epochs or patience");
    }
    std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + salt);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_hold = n >= 10 ? static_cast<std::size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(n))) : 0;
    std::vector<std::size_t> holdout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_hold), order.end());

    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    struct Chunk {
        InputBatch input;
        Matrix targets;
    };
    std::vector<Chunk> hold_chunks;
    {
        std::mt19937_64 hold_rng(cfg.seed + salt + 17);
        for (std::size_t s = 0; s < holdout.size(); s += bs) {
            Chunk c;
            const auto len = std::min(bs, holdout.size() - s);
            c.input = task.build({holdout.data() + s, len}, hold_rng, c.targets);
            hold_chunks.push_back(std::move(c));
        }
    }

    auto opt = OptimizerState::for_net(net, cfg.adam);
    FitSummary summary;
    double best = std::numeric_limits<double>::infinity();
    std::vector<Matrix> best_params = net.parameters();
    Matrix targets, grad;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(train.begin(), train.end(), rng);
        for (std::size_t s = 0; s < train.size(); s += bs) {
            const auto len = std::min(bs, train.size() - s);
            const InputBatch input = task.build({train.data() + s, len}, rng, targets);
            const Matrix logits = net.forward(input);
            task.loss(logits, targets, &grad);
            adam_step(net, net.backward(grad), opt);
        }
        summary.epochs_run = epoch;
        if (hold_chunks.empty()) {
            summary.best_epoch = epoch;
            continue;
        }
        double loss = 0.0, rows = 0.0;
        for (const auto& c : hold_chunks) {
            const double r = static_cast<double>(c.input.size());
            loss += r * task.loss(net.infer(c.input), c.targets, nullptr);
            rows += r;
        }
        loss /= rows;
        summary.holdout_loss.push_back(loss);
        if (loss < best) {
            best = loss;
            best_params = net.parameters();
            summary.best_epoch = epoch;
        } else if (epoch - summary.best_epoch > cfg.patience) {
            break;
        }
    }
    if (!hold_chunks.empty()) net.parameters() = best_params;
    return summary;
}

}  // namespace

std::vector<LifecycleSample> make_lifecycle_samples(std::span<const ClickEvent> log, const HorizonConfig& horizon) {
    std::vector<LifecycleSample> out;
    out.reserve(log.size());
    for (const auto& e : log) {
        out.push_back({e.features, full_trajectory(e, horizon), ground_truth_label(e, horizon.d_max())});
    }
    return out;
}

int draw_truncation(std::mt19937_64& rng, int windows, int min_k) {
    if (min_k < 0 || min_k > windows) throw std::invalid_argument("draw_truncation: bad range");
    return std::uniform_int_distribution<int>(min_k, windows)(rng);
}

std::vector<double> conditional_entropy_per_window(std::span<const LifecycleSample> data) {
    std::vector<TrajectoryView> views;
    std::vector<int> labels;
    views.reserve(data.size());
    labels.reserve(data.size());
    for (const auto& s : data) {
        views.push_back(s.full);
        labels.push_back(s.label);
    }
    return conditional_entropy_per_window(views, labels);
}

WindowWeights pretrain_window_weights(std::span<const LifecycleSample> data, double beta) {
    return compute_window_weights(conditional_entropy_per_window(data), beta);
}

StaticIntent pretrain_static_intent(std::span<const LifecycleSample> data, const FeatureSchema& schema,
                                    const PretrainConfig& cfg, FitSummary* summary) {
    StaticIntent model(schema, cfg.shape, cfg.seed);
    FitTask task;
    task.build = [&](std::span<const std::size_t> idx, std::mt19937_64&, Matrix& targets) {
        std::vector<FeatureVector> xs;
        xs.reserve(idx.size());
        targets.resize(static_cast<Eigen::Index>(idx.size()), 1);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            xs.push_back(data[idx[i]].x);
            targets(static_cast<Eigen::Index>(i), 0) = data[idx[i]].label;
        }
        return StaticIntent::encode(xs);
    };
    task.loss = softmax2_loss;
    auto s = fit(model.net(), data.size(), cfg, task, 1);
    if (summary) *summary = std::move(s);
    return model;
}

TrajectoryLikelihood pretrain_trajectory_likelihood(std::span<const LifecycleSample> data,
                                                    const FeatureSchema& schema, const HorizonConfig& horizon,
                                                    const PretrainConfig& cfg, FitSummary* summary) {
    TrajectoryLikelihood model(schema, horizon, cfg.shape, cfg.seed + 1);
    const int H = horizon.windows();
    const int K = horizon.behaviors();
    FitTask task;
    task.build = [&](std::span<const std::size_t> idx, std::mt19937_64&, Matrix& targets) {
        std::vector<FeatureVector> xs;
        std::vector<int> hs, ys;
        const auto rows = idx.size() * static_cast<std::size_t>(H);
        xs.reserve(rows);
        targets.resize(static_cast<Eigen::Index>(rows), K);
        Eigen::Index r = 0;
        for (auto i : idx) {
            const auto& s = data[i];
            for (int h = 0; h < H; ++h, ++r) {
                xs.push_back(s.x);
                hs.push_back(h);
                ys.push_back(s.label);
                for (int k = 0; k < K; ++k) targets(r, k) = s.full.state(h, k);
            }
        }
        return model.encode(xs, hs, ys);
    };
    task.loss = sigmoid_loss;
    auto s = fit(model.mutable_net(), data.size(), cfg, task, 2);
    if (summary) *summary = std::move(s);
    model.freeze();
    return model;
}

Completer pretrain_completer(std::span<const LifecycleSample> data, const FeatureSchema& schema,
                             const HorizonConfig& horizon, const PretrainConfig& cfg, FitSummary* summary) {
    Completer model(schema, horizon, cfg.shape, cfg.seed + 2);
    const int H = horizon.windows();
    FitTask task;
    task.build = [&](std::span<const std::size_t> idx, std::mt19937_64& rng, Matrix& targets) {
        std::vector<FeatureVector> xs;
        std::vector<TrajectoryView> views;
        xs.reserve(idx.size());
        views.reserve(idx.size());
        targets.resize(static_cast<Eigen::Index>(idx.size()), 1);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const auto& s = data[idx[i]];
            xs.push_back(s.x);
            views.push_back(truncate(s.full, draw_truncation(rng, H, cfg.truncation_min_k)));
            targets(static_cast<Eigen::Index>(i), 0) = s.label;
        }
        return model.encode(xs, views);
    };
    task.loss = sigmoid_loss;
    auto s = fit(model.mutable_net(), data.size(), cfg, task, 3);
    if (summary) *summary = std::move(s);
    model.freeze();
    return model;
}

}  // namespace trace
