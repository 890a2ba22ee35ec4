#include "trace/report.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace trace {

namespace {

std::string num(const std::optional<double>& v, const char* fmt = "%.17g") {
    if (!v) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, *v);
    return buf;
}

std::optional<double> parse_num(const std::string& s) {
    if (s == "NA") return std::nullopt;
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::runtime_error("report: bad number '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

std::string metric_row(const std::string& key, const IntervalMetrics& m) {
    return key + "," + std::to_string(m.n) + "," + std::to_string(m.n_pos) + "," + num(m.auc) + "," + num(m.nll) +
           "," + num(m.pr_auc) + "," + num(m.ece);
}

IntervalMetrics parse_metric_row(const std::vector<std::string>& f) {
    if (f.size() != 7) throw std::runtime_error("report: expected 7 columns");
    IntervalMetrics m;
    m.n = std::stoull(f[1]);
    m.n_pos = std::stoull(f[2]);
    m.auc = parse_num(f[3]);
    m.nll = parse_num(f[4]);
    m.pr_auc = parse_num(f[5]);
    m.ece = parse_num(f[6]);
    return m;
}

}  // namespace

void write_report(std::ostream& out, const MetricReport& report) {
    out << kReportMagic << '\n' << "# method=" << report.method << '\n' << kIntervalHeader << '\n';
    for (const auto& m : report.intervals) out << metric_row(std::to_string(m.interval_start), m) << '\n';
    const auto& a = report.aggregate;
    out << "# aggregate\n"
        << metric_row("mean", a.mean) << '\n'
        << metric_row("pooled", a.pooled) << '\n'
        << "defined," << a.intervals << ',' << a.auc_intervals << ',' << a.pr_auc_intervals << ','
        << a.nll_intervals << '\n';
}

MetricReport read_report(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kReportMagic) {
        throw std::runtime_error("report: incompatible report schema (missing header)");
    }
    MetricReport r;
    if (!std::getline(in, line) || line.rfind("# method=", 0) != 0) {
        throw std::runtime_error("report: missing method line");
    }
    r.method = line.substr(9);
    if (!std::getline(in, line) || line != kIntervalHeader) {
        throw std::runtime_error("report: incompatible interval columns");
    }
    bool footer = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line == "# aggregate") {
            footer = true;
            continue;
        }
        const auto f = split(line);
        if (!footer) {
            auto m = parse_metric_row(f);
            m.interval_start = std::stoll(f[0]);
            r.intervals.push_back(m);
        } else if (f.at(0) == "mean") {
            r.aggregate.mean = parse_metric_row(f);
        } else if (f.at(0) == "pooled") {
            r.aggregate.pooled = parse_metric_row(f);
        } else if (f.at(0) == "defined" && f.size() == 5) {
            r.aggregate.intervals = std::stoull(f[1]);
            r.aggregate.auc_intervals = std::stoull(f[2]);
            r.aggregate.pr_auc_intervals = std::stoull(f[3]);
            r.aggregate.nll_intervals = std::stoull(f[4]);
        } else {
            throw std::runtime_error("report: unexpected footer line '" + line + "'");
        }
    }
    if (!footer) throw std::runtime_error("report: missing aggregate footer");
    return r;
}

void write_interval_csv(std::ostream& out, const MetricReport& report) {
    out << kIntervalHeader << '\n';
    for (const auto& m : report.intervals) out << metric_row(std::to_string(m.interval_start), m) << '\n';
}

void write_comparison_csv(std::ostream& out, std::span<const MetricReport> reports) {
    out << kComparisonHeader << '\n';
    for (const auto& r : reports) {
        const auto& a = r.aggregate;
        out << r.method << ',' << num(a.mean.auc) << ',' << num(a.mean.nll) << ',' << num(a.mean.pr_auc) << ','
            << num(a.mean.ece) << ',' << num(a.pooled.auc) << ',' << num(a.pooled.nll) << ',' << a.intervals << '\n';
    }
}

void write_comparison_table(std::ostream& out, std::span<const MetricReport> reports) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %8s %8s %8s %8s\n", "Method", "AUC", "NLL", "PR-AUC", "ECE");
    out << buf;
    for (const auto& r : reports) {
        const auto& m = r.aggregate.mean;
        std::snprintf(buf, sizeof buf, "%-16s %8s %8s %8s %8s\n", r.method.c_str(), num(m.auc, "%.4f").c_str(),
                      num(m.nll, "%.4f").c_str(), num(m.pr_auc, "%.4f").c_str(), num(m.ece, "%.4f").c_str());
        out << buf;
    }
}

}  // namespace trace
