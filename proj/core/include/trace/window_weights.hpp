#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "trace/event_model.hpp"

namespace trace {

/// Per-window importance derived from how much each window's cumulative
/// state resolves the final label on full-lifecycle data.
struct WindowWeights {
    std::vector<double> eta;      // normalized, sums to 1
    std::vector<double> c_tilde;  // conditional entropy / max, in [0, 1]
    double beta = 2.0;

    int windows() const { return static_cast<int>(eta.size()); }

    /// Uniform weights, for tests and for models without pretraining.
    static WindowWeights uniform(int windows);
};

/// Empirical H(y | o_h) per window, natural log. The K-bit state of each
/// window is treated as one discrete variable; unseen states carry no mass.
/// `trajectories` must be fully observed. Throws on empty input.
std::vector<double> conditional_entropy_per_window(std::span<const TrajectoryView> trajectories,
                                                   std::span<const int> labels);

/// eta_h ∝ (H-h+1)^-1 exp(-h/H - beta * c_tilde_h) with 1-based h and
/// c_tilde = entropies / max(entropies) (all zeros if the max is 0).
WindowWeights compute_window_weights(std::span<const double> entropies, double beta);

/// Plain text, one "h c_tilde eta" line per window after a "# beta=" header.
void save_window_weights(const std::filesystem::path& path, const WindowWeights& w);
WindowWeights load_window_weights(const std::filesystem::path& path);

}  // namespace trace
