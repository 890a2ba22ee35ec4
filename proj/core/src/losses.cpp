#include "trace/losses.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace trace {

void GateConfig::validate() const {
    if (!(slope > 0.0)) throw std::invalid_argument("gate: slope must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("gate: epsilon must be positive");
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_sigmoid(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

std::vector<double> alpha_weights(std::span<const std::uint8_t> mask, std::span<const double> eta, double epsilon) {
    if (mask.size() != eta.size()) throw std::invalid_argument("alpha_weights: mask/eta length mismatch");
    double denom = epsilon;
    for (std::size_t h = 0; h < mask.size(); ++h) denom += mask[h] * eta[h];
    std::vector<double> alpha(mask.size(), 0.0);
    for (std::size_t h = 0; h < mask.size(); ++h) alpha[h] = mask[h] * eta[h] / denom;
    return alpha;
}

double marginal_window_loss(Posterior prior, double lik0, double lik1) {
    return -std::log(prior.p0 * lik0 + prior.p1 * lik1);
}

double trajectory_loss(std::span<const WindowTerm> terms) {
    double num = 0.0, den = 0.0;
    for (const auto& t : terms) {
        num += t.weight * t.loss;
        den += t.weight;
    }
    return den > 0.0 ? num / den : 0.0;
}

double supervised_loss(std::span<const double> p1, std::span<const int> labels) {
    if (p1.size() != labels.size()) throw std::invalid_argument("supervised_loss: length mismatch");
    if (p1.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < p1.size(); ++i) s -= std::log(labels[i] ? p1[i] : 1.0 - p1[i]);
    return s / static_cast<double>(p1.size());
}

double bce(double p, double target) {
    // 0 log 0 = 0, so saturated predictions that agree with the target cost nothing.
    double l = 0.0;
    if (target > 0.0) l -= target * std::log(p);
    if (target < 1.0) l -= (1.0 - target) * std::log1p(-p);
    return l;
}

double normalized_binary_entropy(double p) {
    double h = 0.0;
    if (p > 0.0) h -= p * std::log(p);
    if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
    return h / std::numbers::ln2;
}

double reliability_gate(double p, double q, double kappa, const GateConfig& gate) {
    const double u1 = normalized_binary_entropy(p);
    const double u2 = 1.0 - normalized_binary_entropy(q);
    const double u3 = 1.0 - kappa;
    return sigmoid(gate.slope * (u1 - gate.center)) * sigmoid(gate.slope * (u2 - gate.center)) *
           sigmoid(gate.slope * (u3 - gate.center));
}

double consistency_loss(std::span<const double> p, std::span<const double> q, std::span<const double> w,
                        double epsilon) {
    if (p.size() != q.size() || p.size() != w.size()) throw std::invalid_argument("consistency_loss: length mismatch");
    double num = 0.0, den = epsilon;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (w[i] == 0.0) continue;
        num += w[i] * bce(p[i], q[i]);
        den += w[i];
    }
    return num / den;
}

double plugin_objective(double backbone_loss, double consistency, double lambda) {
    return backbone_loss + lambda * consistency;
}

}  // namespace trace
