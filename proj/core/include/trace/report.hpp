#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "trace/metrics.hpp"

namespace trace {

/// Metric report of one streaming run.
///
/// Text layout (comma-separated, undefined metrics written as NA):
///
///   # trace-cvr report v1
///   # method=<name>
///   interval_start,n,n_pos,auc,nll,pr_auc,ece
///   <one row per non-empty interval>
///   # aggregate
///   mean,<n>,<n_pos>,<auc>,<nll>,<pr_auc>,<ece>
///   pooled,<n>,<n_pos>,<auc>,<nll>,<pr_auc>,<ece>
///   defined,<intervals>,<auc_intervals>,<pr_auc_intervals>,<nll_intervals>
struct MetricReport {
    std::string method;
    std::vector<IntervalMetrics> intervals;
    AggregateMetrics aggregate;
};

inline constexpr const char* kReportMagic = "# trace-cvr report v1";
inline constexpr const char* kIntervalHeader = "interval_start,n,n_pos,auc,nll,pr_auc,ece";
/// Column order of the comparison table produced by write_comparison_csv.
inline constexpr const char* kComparisonHeader = "method,auc,nll,pr_auc,ece,pooled_auc,pooled_nll,intervals";

void write_report(std::ostream& out, const MetricReport& report);
/// Throws std::runtime_error on a missing or incompatible header.
MetricReport read_report(std::istream& in);

/// Interval rows only, for plotting.
void write_interval_csv(std::ostream& out, const MetricReport& report);

/// One row per report with interval-averaged metrics.
void write_comparison_csv(std::ostream& out, std::span<const MetricReport> reports);
/// Aligned text table with the same rows.
void write_comparison_table(std::ostream& out, std::span<const MetricReport> reports);

}  // namespace trace
