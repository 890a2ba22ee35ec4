#include "trace/event_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace trace {

void HorizonConfig::validate() const {
    if (boundaries.empty()) {
        throw std::invalid_argument("horizon: at least one window boundary is required");
    }
    for (std::size_t h = 0; h < boundaries.size(); ++h) {
        if (boundaries[h] <= 0) {
            throw std::invalid_argument("horizon: boundaries must be positive");
        }
        if (h > 0 && boundaries[h] <= boundaries[h - 1]) {
            throw std::invalid_argument("horizon: boundaries must be strictly increasing");
        }
    }
    if (behavior_names.empty()) {
        throw std::invalid_argument("horizon: at least one behavior is required");
    }
    if (purchase_behavior && (*purchase_behavior < 0 || *purchase_behavior >= behaviors())) {
        throw std::invalid_argument("horizon: purchase behavior index out of range");
    }
}

int HorizonConfig::visible_windows(Seconds elapsed) const {
    // Window h is visible once its whole extent has elapsed (u >= boundary).
    return static_cast<int>(std::upper_bound(boundaries.begin(), boundaries.end(), elapsed) - boundaries.begin());
}

HorizonConfig HorizonConfig::criteo() {
    return {{360, 900, 3600, 86400, 604800, 2592000}, {"purchase"}, 0};
}

HorizonConfig HorizonConfig::taobao() {
    return {{120, 600, 7200, 86400, 259200}, {"cart", "favorite", "purchase"}, 2};
}

void FeatureSchema::check(const FeatureVector& x) const {
    if (static_cast<int>(x.numeric.size()) != numeric || static_cast<int>(x.categorical.size()) != categorical) {
        throw std::invalid_argument("features: arity does not match schema");
    }
    for (double v : x.numeric) {
        if (!std::isfinite(v)) throw std::invalid_argument("features: non-finite numeric value");
    }
    for (auto c : x.categorical) {
        if (c >= hash_space) throw std::invalid_argument("features: categorical index outside hash space");
    }
}

void validate_event(const ClickEvent& e, const HorizonConfig& cfg) {
    const auto id = std::to_string(e.sample_id);
    if (e.conv_ts && *e.conv_ts <= e.click_ts) {
        throw std::invalid_argument("sample " + id + ": conv_ts must be after click_ts");
    }
    if (static_cast<int>(e.behavior_ts.size()) != cfg.behaviors()) {
        throw std::invalid_argument("sample " + id + ": behavior count does not match horizon config");
    }
    for (const auto& b : e.behavior_ts) {
        if (b && *b <= e.click_ts) {
            throw std::invalid_argument("sample " + id + ": behavior timestamp must be after click_ts");
        }
    }
    if (cfg.purchase_behavior && e.behavior_ts[static_cast<std::size_t>(*cfg.purchase_behavior)] != e.conv_ts) {
        throw std::invalid_argument("sample " + id + ": purchase behavior timestamp must equal conv_ts");
    }
}

int TrajectoryView::visible() const {
    return static_cast<int>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

TrajectoryView TrajectoryView::blank(int windows, int behaviors) {
    TrajectoryView v;
    v.windows = windows;
    v.behaviors = behaviors;
    v.states.assign(static_cast<std::size_t>(windows * behaviors), 0);
    v.mask.assign(static_cast<std::size_t>(windows), 0);
    return v;
}

bool is_well_formed(const TrajectoryView& v) {
    if (v.windows <= 0 || v.behaviors <= 0) return false;
    if (v.mask.size() != static_cast<std::size_t>(v.windows)) return false;
    if (v.states.size() != static_cast<std::size_t>(v.windows * v.behaviors)) return false;
    int visible = 0;
    for (int h = 0; h < v.windows; ++h) {
        if (v.mask[h] > 1) return false;
        if (h > 0 && v.mask[h] == 1 && v.mask[h - 1] == 0) return false;
        visible += v.mask[h];
        for (int k = 0; k < v.behaviors; ++k) {
            const auto s = v.state(h, k);
            if (s > 1) return false;
            if (v.mask[h] == 0 && s != 0) return false;
            if (h > 0 && v.mask[h] == 1 && s < v.state(h - 1, k)) return false;
        }
    }
    return v.kappa == static_cast<double>(visible) / v.windows;
}

int ground_truth_label(const ClickEvent& e, Seconds d_max) {
    return (e.conv_ts && *e.conv_ts > e.click_ts && *e.conv_ts - e.click_ts <= d_max) ? 1 : 0;
}

int observed_label(const ClickEvent& e, Seconds tau) {
    if (tau < e.click_ts) {
        throw std::invalid_argument("observed_label: tau precedes the click");
    }
    return (e.conv_ts && *e.conv_ts > e.click_ts && *e.conv_ts <= tau) ? 1 : 0;
}

bool is_revealed(const ClickEvent& e, Seconds tau, Seconds d_max) {
    return observed_label(e, tau) == 1 || tau > e.click_ts + d_max;
}

int revealed_label(const ClickEvent& e, Seconds tau, Seconds d_max) {
    if (!is_revealed(e, tau, d_max)) {
        throw std::invalid_argument("revealed_label: sample is not revealed at tau");
    }
    return (e.conv_ts && *e.conv_ts <= tau && *e.conv_ts - e.click_ts <= d_max) ? 1 : 0;
}

namespace {

TrajectoryView build_with_visible(const ClickEvent& e, Seconds tau, int visible, const HorizonConfig& cfg) {
    const int H = cfg.windows();
    const int K = cfg.behaviors();
    auto v = TrajectoryView::blank(H, K);
    for (int h = 0; h < visible; ++h) {
        v.mask[h] = 1;
        for (int k = 0; k < K; ++k) {
            const auto& b = e.behavior_ts[static_cast<std::size_t>(k)];
            const bool hit = b && *b - e.click_ts <= cfg.boundaries[h] && *b <= tau;
            v.states[static_cast<std::size_t>(h * K + k)] = hit ? 1 : 0;
        }
    }
    v.kappa = static_cast<double>(visible) / H;
    return v;
}

}  // namespace

TrajectoryView build_trajectory(const ClickEvent& e, Seconds tau, const HorizonConfig& cfg) {
    if (tau < e.click_ts) {
        throw std::invalid_argument("build_trajectory: tau precedes the click");
    }
    if (static_cast<int>(e.behavior_ts.size()) != cfg.behaviors()) {
        throw std::invalid_argument("build_trajectory: behavior count does not match horizon config");
    }
    return build_with_visible(e, tau, cfg.visible_windows(tau - e.click_ts), cfg);
}

TrajectoryView full_trajectory(const ClickEvent& e, const HorizonConfig& cfg) {
    return build_trajectory(e, e.click_ts + cfg.d_max(), cfg);
}

TrajectoryView truncate(const TrajectoryView& full, int k) {
    if (k < 0 || k > full.windows) {
        throw std::invalid_argument("truncate: k out of range");
    }
    auto v = TrajectoryView::blank(full.windows, full.behaviors);
    for (int h = 0; h < k; ++h) {
        v.mask[h] = full.mask[h];
        for (int b = 0; b < full.behaviors; ++b) {
            v.states[static_cast<std::size_t>(h * full.behaviors + b)] = full.state(h, b) & full.mask[h];
        }
    }
    v.kappa = static_cast<double>(v.visible()) / full.windows;
    return v;
}

ClickEvent censor(const ClickEvent& e, Seconds tau) {
    ClickEvent out = e;
    if (out.conv_ts && *out.conv_ts > tau) out.conv_ts.reset();
    for (auto& b : out.behavior_ts) {
        if (b && *b > tau) b.reset();
    }
    return out;
}

}  // namespace trace
