#include "trace/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace trace {

namespace {

// -log softmax(z)_y for two classes, written in terms of the margin z1 - z0.
double two_class_nll(double margin, int y) { return y ? -log_sigmoid(margin) : -log_sigmoid(-margin); }

// BCE(sigmoid(margin), t) without forming the probability.
double margin_bce(double margin, double t) { return -(t * log_sigmoid(margin) + (1.0 - t) * log_sigmoid(-margin)); }

// Every loss here depends on the logits only through their margin, so
// d/d(logit0) = -d/d(logit1).
void add_margin_grad(Matrix& grad, std::size_t i, double g) {
    const auto row = static_cast<Eigen::Index>(i);
    grad(row, 0) -= g;
    grad(row, 1) += g;
}

}  // namespace

ObjectiveResult trace_objective(std::span<const TraceExample> batch, const TraceObjectiveConfig& cfg,
                                const std::vector<double>* fixed_gates) {
    cfg.gate.validate();
    const auto n = batch.size();
    if (fixed_gates && fixed_gates->size() != n) throw std::invalid_argument("trace_objective: gate count mismatch");

    ObjectiveResult r;
    r.logit_grad = Matrix::Zero(static_cast<Eigen::Index>(n), 2);
    r.p1.resize(n);
    r.gates.assign(n, 0.0);
    auto& b = r.breakdown;

    const bool fused_sup = cfg.supervised == SupervisedPosterior::kFused;
    std::vector<double> margins(n);
    double trj_num = 0.0, trj_den = 0.0;
    double con_num = 0.0, con_den = cfg.gate.epsilon;
    double sup_sum = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = batch[i];
        margins[i] = (s.logit1 - s.logit0) + (cfg.use_trajectory ? s.score1 - s.score0 : 0.0);
        r.p1[i] = sigmoid(margins[i]);
        if (s.revealed) {
            if (s.supervise) {
                b.revealed += 1;
                sup_sum += two_class_nll(fused_sup ? margins[i] : s.logit1 - s.logit0, s.label);
            }
        } else {
            b.unrevealed += 1;
            r.gates[i] = fixed_gates ? (*fixed_gates)[i]
                         : cfg.use_gate ? reliability_gate(r.p1[i], s.completer_q, s.kappa, cfg.gate)
                                        : 1.0;
            con_num += r.gates[i] * margin_bce(margins[i], s.completer_q);
            con_den += r.gates[i];
        }
        if (!cfg.use_trajectory) continue;
        const double prior1 = sigmoid(s.logit1 - s.logit0);
        const Posterior prior{1.0 - prior1, prior1};
        for (const auto& w : s.windows) {
            b.visible_windows += 1;
            trj_num += w.eta * marginal_window_loss(prior, w.lik0, w.lik1);
            trj_den += w.eta;
        }
    }

    b.trj_empty = trj_den <= 0.0;
    b.sup_empty = b.revealed == 0;
    b.con_empty = b.unrevealed == 0;
    b.l_trj = b.trj_empty ? 0.0 : trj_num / trj_den;
    b.l_sup = b.sup_empty ? 0.0 : sup_sum / b.revealed;
    b.l_con = b.con_empty ? 0.0 : con_num / con_den;
    b.total = b.l_trj + b.l_sup + cfg.lambda * b.l_con;

    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = batch[i];
        if (s.revealed) {
            if (s.supervise) {
                const double p = fused_sup ? r.p1[i] : sigmoid(s.logit1 - s.logit0);
                add_margin_grad(r.logit_grad, i, (p - s.label) / b.revealed);
            }
        } else if (cfg.lambda != 0.0) {
            add_margin_grad(r.logit_grad, i, cfg.lambda * r.gates[i] * (r.p1[i] - s.completer_q) / con_den);
        }
        if (!cfg.use_trajectory || b.trj_empty) continue;
        const double prior1 = sigmoid(s.logit1 - s.logit0);
        for (const auto& w : s.windows) {
            // d l / d margin = p1 - responsibility of class 1.
            const double mix = (1.0 - prior1) * w.lik0 + prior1 * w.lik1;
            const double resp1 = prior1 * w.lik1 / mix;
            add_margin_grad(r.logit_grad, i, (w.eta / trj_den) * (prior1 - resp1));
        }
    }
    return r;
}

ObjectiveResult bce_objective(std::span<const BceExample> batch, const PluginConfig& plugin,
                              const std::vector<double>* fixed_gates) {
    plugin.gate.validate();
    const auto n = batch.size();
    if (fixed_gates && fixed_gates->size() != n) throw std::invalid_argument("bce_objective: gate count mismatch");

    ObjectiveResult r;
    r.logit_grad = Matrix::Zero(static_cast<Eigen::Index>(n), 2);
    r.p1.resize(n);
    r.gates.assign(n, 0.0);
    auto& b = r.breakdown;
    if (n == 0) return r;

    double sup_sum = 0.0;
    double con_num = 0.0, con_den = plugin.gate.epsilon;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = batch[i];
        const double margin = s.logit1 - s.logit0;
        r.p1[i] = sigmoid(margin);
        sup_sum += two_class_nll(margin, s.label);
        if (s.revealed) {
            b.revealed += 1;
            continue;
        }
        b.unrevealed += 1;
        if (plugin.lambda == 0.0) continue;
        r.gates[i] = fixed_gates ? (*fixed_gates)[i]
                     : plugin.use_gate ? reliability_gate(r.p1[i], s.completer_q, s.kappa, plugin.gate)
                                       : 1.0;
        con_num += r.gates[i] * margin_bce(margin, s.completer_q);
        con_den += r.gates[i];
    }
    b.sup_empty = false;
    b.l_sup = sup_sum / static_cast<double>(n);
    b.con_empty = plugin.lambda == 0.0 || b.unrevealed == 0;
    b.l_con = b.con_empty ? 0.0 : con_num / con_den;
    b.total = plugin_objective(b.l_sup, b.l_con, plugin.lambda);

    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = batch[i];
        double g = (r.p1[i] - s.label) / static_cast<double>(n);
        if (!s.revealed && !b.con_empty) g += plugin.lambda * r.gates[i] * (r.p1[i] - s.completer_q) / con_den;
        add_margin_grad(r.logit_grad, i, g);
    }
    return r;
}

}  // namespace trace
