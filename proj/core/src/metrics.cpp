#include "trace/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace trace {

void MetricAccumulator::add(double score, int label) {
    if (!std::isfinite(score) || score < 0.0 || score > 1.0) {
        throw std::invalid_argument("MetricAccumulator: score must be finite and in [0, 1]");
    }
    pairs.push_back({score, label ? 1 : 0});
}

namespace {

std::vector<ScoredLabel> sorted_by_score(std::span<const ScoredLabel> pairs, bool descending) {
    std::vector<ScoredLabel> v(pairs.begin(), pairs.end());
    std::stable_sort(v.begin(), v.end(), [descending](const auto& a, const auto& b) {
        return descending ? a.score > b.score : a.score < b.score;
    });
    return v;
}

}  // namespace

std::optional<double> auc(std::span<const ScoredLabel> pairs) {
    const auto v = sorted_by_score(pairs, false);
    double pos = 0.0, neg = 0.0, rank_sum = 0.0;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        double tied_pos = 0.0;
        while (j < v.size() && v[j].score == v[i].score) tied_pos += v[j++].label;
        // Ranks i+1..j share their average.
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        rank_sum += tied_pos * avg_rank;
        pos += tied_pos;
        neg += static_cast<double>(j - i) - tied_pos;
        i = j;
    }
    if (pos == 0.0 || neg == 0.0) return std::nullopt;
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

std::optional<double> pr_auc(std::span<const ScoredLabel> pairs) {
    const auto v = sorted_by_score(pairs, true);
    const double total_pos = std::accumulate(v.begin(), v.end(), 0.0, [](double s, const auto& p) { return s + p.label; });
    if (total_pos == 0.0) return std::nullopt;
    double tp = 0.0, seen = 0.0, prev_recall = 0.0, ap = 0.0;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        while (j < v.size() && v[j].score == v[i].score) {
            tp += v[j].label;
            seen += 1.0;
            ++j;
        }
        const double recall = tp / total_pos;
        ap += (recall - prev_recall) * (tp / seen);
        prev_recall = recall;
        i = j;
    }
    return ap;
}

double nll(std::span<const ScoredLabel> pairs) {
    if (pairs.empty()) throw std::invalid_argument("nll: no pairs");
    double s = 0.0;
    for (const auto& p : pairs) {
        const double q = std::clamp(p.score, 1e-7, 1.0 - 1e-7);
        s -= p.label ? std::log(q) : std::log(1.0 - q);
    }
    return s / static_cast<double>(pairs.size());
}

double ece(std::span<const ScoredLabel> pairs, int bins) {
    if (pairs.empty()) throw std::invalid_argument("ece: no pairs");
    if (bins <= 0) throw std::invalid_argument("ece: bins must be positive");
    std::vector<double> count(static_cast<std::size_t>(bins), 0.0), label_sum(count), score_sum(count);
    for (const auto& p : pairs) {
        const auto b = static_cast<std::size_t>(std::min(static_cast<int>(p.score * bins), bins - 1));
        count[b] += 1.0;
        label_sum[b] += p.label;
        score_sum[b] += p.score;
    }
    const double n = static_cast<double>(pairs.size());
    double e = 0.0;
    for (std::size_t b = 0; b < count.size(); ++b) {
        if (count[b] == 0.0) continue;
        e += (count[b] / n) * std::abs(label_sum[b] / count[b] - score_sum[b] / count[b]);
    }
    return e;
}

IntervalMetrics evaluate_interval(const MetricAccumulator& acc) {
    IntervalMetrics m;
    m.interval_start = acc.interval_start;
    m.n = acc.pairs.size();
    for (const auto& p : acc.pairs) m.n_pos += static_cast<std::size_t>(p.label);
    if (m.n == 0) return m;
    m.auc = auc(acc.pairs);
    m.pr_auc = pr_auc(acc.pairs);
    m.nll = nll(acc.pairs);
    m.ece = ece(acc.pairs);
    return m;
}

AggregateMetrics aggregate(std::span<const IntervalMetrics> intervals, std::span<const ScoredLabel> pooled_pairs) {
    AggregateMetrics a;
    a.intervals = intervals.size();
    double auc_sum = 0.0, pr_sum = 0.0, nll_sum = 0.0, ece_sum = 0.0;
    for (const auto& m : intervals) {
        a.mean.n += m.n;
        a.mean.n_pos += m.n_pos;
        if (m.auc) {
            auc_sum += *m.auc;
            a.auc_intervals += 1;
        }
        if (m.pr_auc) {
            pr_sum += *m.pr_auc;
            a.pr_auc_intervals += 1;
        }
        if (m.nll) {
            nll_sum += *m.nll;
            ece_sum += *m.ece;
            a.nll_intervals += 1;
        }
    }
    if (a.auc_intervals) a.mean.auc = auc_sum / static_cast<double>(a.auc_intervals);
    if (a.pr_auc_intervals) a.mean.pr_auc = pr_sum / static_cast<double>(a.pr_auc_intervals);
    if (a.nll_intervals) {
        a.mean.nll = nll_sum / static_cast<double>(a.nll_intervals);
        a.mean.ece = ece_sum / static_cast<double>(a.nll_intervals);
    }
    MetricAccumulator all;
    all.pairs.assign(pooled_pairs.begin(), pooled_pairs.end());
    a.pooled = evaluate_interval(all);
    return a;
}

AggregateMetrics aggregate(std::span<const MetricAccumulator> intervals) {
    std::vector<IntervalMetrics> per;
    std::vector<ScoredLabel> pooled;
    for (const auto& acc : intervals) {
        if (acc.pairs.empty()) continue;
        per.push_back(evaluate_interval(acc));
        pooled.insert(pooled.end(), acc.pairs.begin(), acc.pairs.end());
    }
    return aggregate(per, pooled);
}

}  // namespace trace
