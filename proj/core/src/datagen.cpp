#include "trace/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ini.hpp"
#include "trace/metrics.hpp"

namespace trace {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

Seconds whole_seconds(double raw) { return std::max<Seconds>(1, static_cast<Seconds>(std::ceil(raw))); }

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("GeneratorSpec: " + what);
}

bool probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

/// Parameters of the hidden data-generating process, drawn from the seed.
struct Truth {
    std::vector<double> w;
    std::vector<double> drift_w;
    std::vector<double> v;
    std::vector<std::vector<double>> cat_effect;
    std::vector<std::vector<std::uint32_t>> cat_hash;
};

Truth draw_truth(const GeneratorSpec& s) {
    std::mt19937_64 rng(splitmix64(s.seed));
    std::normal_distribution<double> normal(0.0, 1.0);
    Truth t;
    const auto d = static_cast<std::size_t>(s.numeric_dims);
    t.w = s.cvr_weights;
    if (t.w.empty()) {
        for (std::size_t j = 0; j < d; ++j) t.w.push_back(s.cvr_weight_scale * normal(rng));
    }
    for (std::size_t j = 0; j < d; ++j) t.drift_w.push_back(normal(rng));
    t.v = s.delay_weights;
    if (t.v.empty()) {
        for (std::size_t j = 0; j < d; ++j) t.v.push_back(s.delay_weight_scale * normal(rng));
    }
    for (std::size_t f = 0; f < s.categorical_cardinalities.size(); ++f) {
        std::vector<double> effects;
        std::vector<std::uint32_t> hashes;
        for (std::uint32_t c = 0; c < s.categorical_cardinalities[f]; ++c) {
            effects.push_back(s.category_effect_scale * normal(rng));
            const std::uint64_t key = (static_cast<std::uint64_t>(f) << 32) | c;
            hashes.push_back(static_cast<std::uint32_t>(splitmix64(key ^ s.seed) % s.hash_space));
        }
        t.cat_effect.push_back(std::move(effects));
        t.cat_hash.push_back(std::move(hashes));
    }
    return t;
}

struct Draw {
    ClickEvent event;
    TruthRecord truth;
};

Draw draw_sample(const GeneratorSpec& s, const Truth& t, std::size_t i) {
    std::mt19937_64 rng(splitmix64(s.seed ^ splitmix64(static_cast<std::uint64_t>(i) + 1)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Draw d;
    auto& e = d.event;
    e.click_ts = static_cast<Seconds>(unit(rng) * static_cast<double>(s.span));
    double z = s.cvr_bias, drift_z = 0.0, fast_z = 0.0;
    for (int j = 0; j < s.numeric_dims; ++j) {
        const double x = normal(rng);
        e.features.numeric.push_back(x);
        z += t.w[static_cast<std::size_t>(j)] * x;
        drift_z += t.drift_w[static_cast<std::size_t>(j)] * x;
        fast_z += t.v[static_cast<std::size_t>(j)] * x;
    }
    for (std::size_t f = 0; f < s.categorical_cardinalities.size(); ++f) {
        std::uniform_int_distribution<std::uint32_t> pick(0, s.categorical_cardinalities[f] - 1);
        const auto c = pick(rng);
        e.features.categorical.push_back(t.cat_hash[f][c]);
        z += t.cat_effect[f][c];
    }
    const double phase = 2.0 * static_cast<double>(e.click_ts) / static_cast<double>(s.span) - 1.0;
    z += s.drift * phase * drift_z;

    const double p_intent = sigmoid(z);
    double f_fast;
    if (s.fast_fraction >= 1.0) f_fast = 1.0;
    else if (s.fast_fraction <= 0.0) f_fast = 0.0;
    else f_fast = sigmoid(logit(s.fast_fraction) + fast_z);
    const double dm = static_cast<double>(s.d_max);
    const double p_in_window = f_fast * (1.0 - std::exp(-dm / s.fast_mean)) +
                               (1.0 - f_fast) * (1.0 - std::exp(-dm / s.slow_mean));

    const bool intent = unit(rng) < p_intent;
    const bool fast = unit(rng) < f_fast;
    const double raw_delay = std::exponential_distribution<double>(1.0 / (fast ? s.fast_mean : s.slow_mean))(rng);

    auto& tr = d.truth;
    tr.p_star = p_intent * p_in_window;
    if (intent) {
        const Seconds delay = whole_seconds(raw_delay);
        e.conv_ts = e.click_ts + delay;
        tr.delay = delay;
        tr.y = delay <= s.d_max ? 1 : 0;
    }
    for (const auto& b : s.behaviors) {
        const bool occurs = unit(rng) < (intent ? b.p_pos : b.p_neg);
        const double mean = intent ? b.mean_delay_pos : b.mean_delay_neg;
        const double raw = std::exponential_distribution<double>(1.0 / mean)(rng);
        e.behavior_ts.push_back(occurs ? std::optional<Seconds>(e.click_ts + whole_seconds(raw)) : std::nullopt);
    }
    if (s.track_purchase) e.behavior_ts.push_back(e.conv_ts);
    return d;
}

}  // namespace

void GeneratorSpec::validate() const {
    require(n_samples > 0, "n_samples must be positive");
    require(span > 0, "span must be positive");
    require(numeric_dims >= 0, "numeric_dims must be non-negative");
    require(hash_space > 0, "hash_space must be positive");
    for (auto c : categorical_cardinalities) require(c > 0, "categorical cardinalities must be positive");
    require(std::isfinite(cvr_bias), "cvr_bias must be finite");
    require(cvr_weights.empty() || cvr_weights.size() == static_cast<std::size_t>(numeric_dims),
            "cvr_weights must have numeric_dims entries");
    require(delay_weights.empty() || delay_weights.size() == static_cast<std::size_t>(numeric_dims),
            "delay_weights must have numeric_dims entries");
    for (double w : cvr_weights) require(std::isfinite(w), "cvr_weights must be finite");
    for (double w : delay_weights) require(std::isfinite(w), "delay_weights must be finite");
    require(std::isfinite(cvr_weight_scale) && cvr_weight_scale >= 0, "cvr_weight_scale must be >= 0");
    require(std::isfinite(delay_weight_scale) && delay_weight_scale >= 0, "delay_weight_scale must be >= 0");
    require(std::isfinite(category_effect_scale) && category_effect_scale >= 0, "category_effect_scale must be >= 0");
    require(std::isfinite(drift), "drift must be finite");
    require(probability(fast_fraction), "fast_fraction must be in [0, 1]");
    require(std::isfinite(fast_mean) && fast_mean > 0, "fast_mean must be positive");
    require(std::isfinite(slow_mean) && slow_mean > 0, "slow_mean must be positive");
    require(d_max > 0, "d_max must be positive");
    for (const auto& b : behaviors) {
        require(!b.name.empty(), "behavior names must be non-empty");
        require(probability(b.p_pos) && probability(b.p_neg), "behavior " + b.name + ": probabilities must be in [0, 1]");
        require(std::isfinite(b.mean_delay_pos) && b.mean_delay_pos > 0 && std::isfinite(b.mean_delay_neg) &&
                    b.mean_delay_neg > 0,
                "behavior " + b.name + ": delay means must be positive");
    }
    require(!behaviors.empty() || track_purchase, "at least one behavior must be tracked");
}

FeatureSchema GeneratorSpec::feature_schema() const {
    return {numeric_dims, static_cast<int>(categorical_cardinalities.size()), hash_space};
}

std::vector<std::string> GeneratorSpec::behavior_names() const {
    std::vector<std::string> names;
    for (const auto& b : behaviors) names.push_back(b.name);
    if (track_purchase) names.emplace_back("purchase");
    return names;
}

std::optional<int> GeneratorSpec::purchase_index() const {
    if (!track_purchase) return std::nullopt;
    return static_cast<int>(behaviors.size());
}

GeneratedData generate(const GeneratorSpec& spec) {
    spec.validate();
    const Truth truth = draw_truth(spec);
    std::vector<Draw> draws;
    draws.reserve(spec.n_samples);
    for (std::size_t i = 0; i < spec.n_samples; ++i) draws.push_back(draw_sample(spec, truth, i));

    std::vector<std::size_t> order(draws.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return draws[a].event.click_ts < draws[b].event.click_ts; });

    GeneratedData out;
    out.log.reserve(draws.size());
    out.truth.reserve(draws.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        auto& d = draws[order[rank]];
        d.event.sample_id = static_cast<std::int64_t>(rank);
        d.truth.sample_id = d.event.sample_id;
        out.log.push_back(std::move(d.event));
        out.truth.push_back(d.truth);
    }
    return out;
}

double bayes_auc(std::span<const TruthRecord> truth) {
    std::vector<ScoredLabel> pairs;
    pairs.reserve(truth.size());
    for (const auto& t : truth) pairs.push_back({t.p_star, t.y});
    const bool constant = std::all_of(pairs.begin(), pairs.end(), [&](const auto& p) { return p.score == pairs.front().score; });
    const auto a = auc(pairs);
    if (!a || constant) throw std::domain_error("bayes_auc: undefined (single class or constant p_star)");
    return *a;
}

GeneratorSpec load_generator_spec(const std::filesystem::path& path) {
    const auto root = ini::read(path);
    GeneratorSpec s;
    const auto* g = ini::section(root, "generator");
    if (!g) throw ini::ConfigError(path.string() + ": missing [generator] section");
    ini::reject_unknown(*g, "generator",
                        {"n_samples", "span", "numeric_dims", "categorical_cardinalities", "hash_space", "cvr_bias",
                         "cvr_weights", "cvr_weight_scale", "category_effect_scale", "drift", "fast_fraction",
                         "fast_mean", "slow_mean", "delay_weights", "delay_weight_scale", "behaviors",
                         "track_purchase", "d_max", "seed"});
    ini::get(*g, "n_samples", s.n_samples, "generator");
    ini::get(*g, "span", s.span, "generator");
    ini::get(*g, "numeric_dims", s.numeric_dims, "generator");
    ini::get_list(*g, "categorical_cardinalities", s.categorical_cardinalities, "generator");
    ini::get(*g, "hash_space", s.hash_space, "generator");
    ini::get(*g, "cvr_bias", s.cvr_bias, "generator");
    ini::get_list(*g, "cvr_weights", s.cvr_weights, "generator");
    ini::get(*g, "cvr_weight_scale", s.cvr_weight_scale, "generator");
    ini::get(*g, "category_effect_scale", s.category_effect_scale, "generator");
    ini::get(*g, "drift", s.drift, "generator");
    ini::get(*g, "fast_fraction", s.fast_fraction, "generator");
    ini::get(*g, "fast_mean", s.fast_mean, "generator");
    ini::get(*g, "slow_mean", s.slow_mean, "generator");
    ini::get_list(*g, "delay_weights", s.delay_weights, "generator");
    ini::get(*g, "delay_weight_scale", s.delay_weight_scale, "generator");
    ini::get(*g, "track_purchase", s.track_purchase, "generator");
    ini::get(*g, "d_max", s.d_max, "generator");
    ini::get(*g, "seed", s.seed, "generator");

    std::vector<std::string> names;
    ini::get_list(*g, "behaviors", names, "generator");
    if (g->get_optional<std::string>("behaviors")) {
        s.behaviors.clear();
        for (const auto& name : names) {
            const std::string where = "behavior:" + name;
            const auto* b = ini::section(root, where);
            if (!b) throw ini::ConfigError(path.string() + ": missing [" + where + "] section");
            ini::reject_unknown(*b, where, {"p_pos", "p_neg", "mean_delay_pos", "mean_delay_neg"});
            BehaviorSpec spec{name};
            ini::get(*b, "p_pos", spec.p_pos, where);
            ini::get(*b, "p_neg", spec.p_neg, where);
            ini::get(*b, "mean_delay_pos", spec.mean_delay_pos, where);
            ini::get(*b, "mean_delay_neg", spec.mean_delay_neg, where);
            s.behaviors.push_back(spec);
        }
    }
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw ini::ConfigError(path.string() + ": " + e.what());
    }
    return s;
}

void save_generator_spec(const std::filesystem::path& path, const GeneratorSpec& s) {
    ini::Tree root, g;
    g.put("n_samples", s.n_samples);
    g.put("span", s.span);
    g.put("numeric_dims", s.numeric_dims);
    g.put("categorical_cardinalities", ini::join(s.categorical_cardinalities));
    g.put("hash_space", s.hash_space);
    g.put("cvr_bias", ini::num(s.cvr_bias));
    if (!s.cvr_weights.empty()) g.put("cvr_weights", ini::join(s.cvr_weights));
    g.put("cvr_weight_scale", ini::num(s.cvr_weight_scale));
    g.put("category_effect_scale", ini::num(s.category_effect_scale));
    g.put("drift", ini::num(s.drift));
    g.put("fast_fraction", ini::num(s.fast_fraction));
    g.put("fast_mean", ini::num(s.fast_mean));
    g.put("slow_mean", ini::num(s.slow_mean));
    if (!s.delay_weights.empty()) g.put("delay_weights", ini::join(s.delay_weights));
    g.put("delay_weight_scale", ini::num(s.delay_weight_scale));
    std::vector<std::string> names;
    for (const auto& b : s.behaviors) names.push_back(b.name);
    g.put("behaviors", ini::join(names));
    g.put("track_purchase", s.track_purchase ? "true" : "false");
    g.put("d_max", s.d_max);
    g.put("seed", s.seed);
    root.push_back({"generator", g});
    for (const auto& b : s.behaviors) {
        ini::Tree sec;
        sec.put("p_pos", ini::num(b.p_pos));
        sec.put("p_neg", ini::num(b.p_neg));
        sec.put("mean_delay_pos", ini::num(b.mean_delay_pos));
        sec.put("mean_delay_neg", ini::num(b.mean_delay_neg));
        root.push_back({"behavior:" + b.name, sec});
    }
    ini::write(path, root);
}

}  // namespace trace
