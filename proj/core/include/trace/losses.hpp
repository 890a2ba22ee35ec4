#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace trace {

/// Two-class distribution (p0, p1).
struct Posterior {
    double p0 = 0.5;
    double p1 = 0.5;
};

/// Sigmoid parameters of the reliability gate, plus the shared epsilon of
/// the alpha and consistency denominators.
struct GateConfig {
    double slope = 4.0;
    double center = 0.5;
    double epsilon = 1e-8;

    void validate() const;
};

/// Scalar summary of one objective evaluation.
struct LossBreakdown {
    double l_trj = 0.0;
    double l_sup = 0.0;
    double l_con = 0.0;
    double total = 0.0;
    int revealed = 0;
    int unrevealed = 0;
    int visible_windows = 0;
    bool trj_empty = true;
    bool sup_empty = true;
    bool con_empty = true;
};

/// alpha_h = m_h eta_h / (sum_t m_t eta_t + epsilon).
std::vector<double> alpha_weights(std::span<const std::uint8_t> mask, std::span<const double> eta, double epsilon);

/// -log(p0 * lik0 + p1 * lik1).
double marginal_window_loss(Posterior prior, double lik0, double lik1);

/// One visible (sample, window) pair of the trajectory loss.
struct WindowTerm {
    double weight = 0.0;  // m_{i,h} * eta_h
    double loss = 0.0;    // marginal window loss
};

/// sum W*l / sum W over visible pairs; 0 when `terms` is empty.
double trajectory_loss(std::span<const WindowTerm> terms);

/// Mean of -log p(y_i) under the given p1 values. Empty input gives 0.
double supervised_loss(std::span<const double> p1, std::span<const int> labels);

/// Binary cross-entropy with a soft target t.
double bce(double p, double target);

/// Binary entropy divided by log 2, so it lies in [0, 1].
double normalized_binary_entropy(double p);

/// prod_j sigmoid(slope * (u_j - center)) over u = (H~(p), 1 - H~(q), 1 - kappa).
double reliability_gate(double p, double q, double kappa, const GateConfig& gate);

/// sum w_i BCE(p_i, q_i) / (sum w_i + epsilon). q is a constant target.
double consistency_loss(std::span<const double> p, std::span<const double> q, std::span<const double> w,
                        double epsilon);

/// L_M + lambda * L_con.
double plugin_objective(double backbone_loss, double consistency, double lambda);

/// Numerically stable log(sigmoid(x)).
double log_sigmoid(double x);
double sigmoid(double x);

}  // namespace trace
