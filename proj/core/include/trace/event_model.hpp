#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trace {

/// Wall-clock time and durations, in integer seconds.
using Seconds = std::int64_t;

/// Horizon discretization of the attribution window [0, d_max].
///
/// `boundaries[h]` is the cut point (elapsed seconds since click) closing
/// window h. The last boundary is d_max. Windows are 0-based in code.
struct HorizonConfig {
    std::vector<Seconds> boundaries;
    std::vector<std::string> behavior_names;
    /// Index of the purchase behavior among `behavior_names`, if tracked.
    std::optional<int> purchase_behavior;

    int windows() const { return static_cast<int>(boundaries.size()); }
    int behaviors() const { return static_cast<int>(behavior_names.size()); }
    Seconds d_max() const { return boundaries.back(); }

    /// Throws std::invalid_argument when the invariants do not hold.
    void validate() const;

    /// Number of fully elapsed windows after `elapsed` seconds.
    int visible_windows(Seconds elapsed) const;

    static HorizonConfig criteo();
    static HorizonConfig taobao();
};

struct FeatureVector {
    std::vector<double> numeric;
    std::vector<std::uint32_t> categorical;

    bool operator==(const FeatureVector&) const = default;
};

/// Fixed per-dataset feature arity. Categorical values are pre-hashed into
/// [0, hash_space).
struct FeatureSchema {
    int numeric = 0;
    int categorical = 0;
    std::uint32_t hash_space = 1u << 18;

    /// Throws std::invalid_argument on arity mismatch, non-finite numerics
    /// or out-of-range categories.
    void check(const FeatureVector& x) const;
    bool operator==(const FeatureSchema&) const = default;
};

struct ClickEvent {
    std::int64_t sample_id = 0;
    FeatureVector features;
    Seconds click_ts = 0;
    std::optional<Seconds> conv_ts;
    /// First occurrence of each tracked post-click behavior.
    std::vector<std::optional<Seconds>> behavior_ts;

    bool operator==(const ClickEvent&) const = default;
};

/// Throws std::invalid_argument describing the first violated invariant.
void validate_event(const ClickEvent& e, const HorizonConfig& cfg);

/// Partial feedback trajectory: cumulative H x K behavior states masked to
/// the fully elapsed windows.
struct TrajectoryView {
    int windows = 0;
    int behaviors = 0;
    std::vector<std::uint8_t> states;  // row-major windows x behaviors
    std::vector<std::uint8_t> mask;
    double kappa = 0.0;

    std::uint8_t state(int h, int k) const { return states[static_cast<std::size_t>(h * behaviors + k)]; }
    std::span<const std::uint8_t> row(int h) const {
        return {states.data() + static_cast<std::size_t>(h * behaviors), static_cast<std::size_t>(behaviors)};
    }
    int visible() const;
    bool empty() const { return visible() == 0; }

    /// Empty trajectory (nothing observed yet).
    static TrajectoryView blank(int windows, int behaviors);
};

/// Checks the prefix-mask, masking, cumulative and kappa invariants.
bool is_well_formed(const TrajectoryView& v);

/// y_i = I(c_i < v_i <= c_i + d_max).
int ground_truth_label(const ClickEvent& e, Seconds d_max);

/// y_i(tau) = I(c_i < v_i <= tau). Throws std::invalid_argument if tau < click.
int observed_label(const ClickEvent& e, Seconds tau);

/// Label known once the sample is revealed: an observed conversion inside
/// the attribution window, otherwise 0. Requires is_revealed(e, tau, d_max).
int revealed_label(const ClickEvent& e, Seconds tau, Seconds d_max);

/// Revealed set membership: observed conversion, or tau > click + d_max.
bool is_revealed(const ClickEvent& e, Seconds tau, Seconds d_max);

/// Partial trajectory at wall-clock tau. Throws if tau < click.
TrajectoryView build_trajectory(const ClickEvent& e, Seconds tau, const HorizonConfig& cfg);

/// Fully observed trajectory (all windows visible).
TrajectoryView full_trajectory(const ClickEvent& e, const HorizonConfig& cfg);

/// Keeps the first k windows of a (full) trajectory, zeroing the rest.
TrajectoryView truncate(const TrajectoryView& full, int k);

/// Copy of `e` with every feedback timestamp later than tau removed.
ClickEvent censor(const ClickEvent& e, Seconds tau);

}  // namespace trace
