#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trace/event_model.hpp"

namespace trace {

/// A non-purchase post-click behavior (cart, favorite, ...). It occurs with
/// probability p_pos for converters and p_neg otherwise, after an
/// exponential delay whose mean also depends on the conversion intent.
struct BehaviorSpec {
    std::string name;
    double p_pos = 0.5;
    double p_neg = 0.1;
    double mean_delay_pos = 600.0;
    double mean_delay_neg = 3600.0;
};

/// Synthetic delayed-feedback log with known ground truth.
///
/// Conversion intent ~ Bernoulli(sigmoid(bias + w.x + category effects +
/// drift term)). Converters draw a delay from a two-exponential mixture
/// whose fast fraction is sigmoid(logit(fast_fraction) + v.x); delays past
/// d_max still appear in the log but the label (attribution) is 0.
struct GeneratorSpec {
    std::size_t n_samples = 200000;
    Seconds span = 10 * 86400;
    int numeric_dims = 8;
    std::vector<std::uint32_t> categorical_cardinalities{40, 40, 40, 40};
    std::uint32_t hash_space = 1024;

    double cvr_bias = -1.5;
    /// Explicit numeric weights; when empty they are drawn N(0, cvr_weight_scale^2).
    std::vector<double> cvr_weights;
    double cvr_weight_scale = 0.6;
    double category_effect_scale = 0.5;
    /// Scale of a linear drift of the weights over the span (0 = stationary).
    double drift = 0.0;

    double fast_fraction = 0.5;
    double fast_mean = 3600.0;
    double slow_mean = 129600.0;
    /// Explicit fast-fraction weights; when empty drawn N(0, delay_weight_scale^2).
    std::vector<double> delay_weights;
    double delay_weight_scale = 3.0;

    std::vector<BehaviorSpec> behaviors{{"cart", 0.7, 0.15, 900.0, 7200.0}, {"favorite", 0.5, 0.15, 1800.0, 7200.0}};
    /// Append the purchase itself as the last tracked behavior.
    bool track_purchase = true;

    Seconds d_max = 3 * 86400;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    FeatureSchema feature_schema() const;
    std::vector<std::string> behavior_names() const;
    std::optional<int> purchase_index() const;
};

/// Ground truth for one generated click.
struct TruthRecord {
    std::int64_t sample_id = 0;
    double p_star = 0.0;  // P(y = 1 | x, click time), attribution included
    int y = 0;
    std::optional<Seconds> delay;

    bool operator==(const TruthRecord&) const = default;
};

struct GeneratedData {
    std::vector<ClickEvent> log;      // sorted by click time, sample_id = position
    std::vector<TruthRecord> truth;   // aligned with log
};

/// Pure function of the generator spec (seed included).
GeneratedData generate(const GeneratorSpec& spec);

/// AUC of p_star against the realized labels. Throws std::domain_error when
/// undefined (one class only, or constant p_star).
double bayes_auc(std::span<const TruthRecord> truth);

/// INI-style spec file: keys under [generator] and one [behavior:<name>]
/// section per behavior.
GeneratorSpec load_generator_spec(const std::filesystem::path& path);
void save_generator_spec(const std::filesystem::path& path, const GeneratorSpec& spec);

}  // namespace trace
