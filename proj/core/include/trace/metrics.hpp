#pragma once

#include <optional>
#include <span>
#include <vector>

#include "trace/event_model.hpp"

namespace trace {

struct ScoredLabel {
    double score = 0.0;  // predicted P(y = 1), in [0, 1]
    int label = 0;
};

/// Pairs collected for one sliding interval.
struct MetricAccumulator {
    Seconds interval_start = 0;
    std::vector<ScoredLabel> pairs;

    /// Throws std::invalid_argument for non-finite or out-of-range scores.
    void add(double score, int label);
};

/// Rank-based (Mann-Whitney) AUC with ties counted as 1/2. Empty when either
/// class is missing.
std::optional<double> auc(std::span<const ScoredLabel> pairs);

/// Average precision over distinct score thresholds. Empty without positives.
std::optional<double> pr_auc(std::span<const ScoredLabel> pairs);

/// Mean log loss with scores clamped to [1e-7, 1 - 1e-7]. Throws on empty input.
double nll(std::span<const ScoredLabel> pairs);

/// Equal-width binned expected calibration error. Throws on empty input.
double ece(std::span<const ScoredLabel> pairs, int bins = 10);

struct IntervalMetrics {
    Seconds interval_start = 0;
    std::size_t n = 0;
    std::size_t n_pos = 0;
    std::optional<double> auc;
    std::optional<double> nll;
    std::optional<double> pr_auc;
    std::optional<double> ece;
};

IntervalMetrics evaluate_interval(const MetricAccumulator& acc);

struct AggregateMetrics {
    /// Arithmetic means over the intervals where each metric is defined.
    IntervalMetrics mean;
    std::size_t intervals = 0;
    std::size_t auc_intervals = 0;
    std::size_t pr_auc_intervals = 0;
    std::size_t nll_intervals = 0;
    /// Metrics over all pairs pooled together.
    IntervalMetrics pooled;
};

AggregateMetrics aggregate(std::span<const MetricAccumulator> intervals);
AggregateMetrics aggregate(std::span<const IntervalMetrics> intervals, std::span<const ScoredLabel> pooled_pairs);

}  // namespace trace
