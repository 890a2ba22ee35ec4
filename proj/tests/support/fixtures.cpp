#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "trace/metrics.hpp"

namespace trace::testing {

FeatureVector random_features(std::mt19937_64& rng, const FeatureSchema& schema) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::uint32_t> cat(0, schema.hash_space - 1);
    FeatureVector x;
    for (int j = 0; j < schema.numeric; ++j) x.numeric.push_back(normal(rng));
    for (int j = 0; j < schema.categorical; ++j) x.categorical.push_back(cat(rng));
    return x;
}

ClickEvent random_event(std::mt19937_64& rng, const HorizonConfig& cfg, const FeatureSchema& schema, std::int64_t id,
                        Seconds click) {
    const Seconds d_max = cfg.d_max();
    // Delays hit window boundaries exactly now and then.
    const auto delay = [&]() -> Seconds {
        std::uniform_int_distribution<int> kind(0, 3);
        switch (kind(rng)) {
            case 0: return cfg.boundaries[std::uniform_int_distribution<std::size_t>(0, cfg.boundaries.size() - 1)(rng)];
            case 1: return std::uniform_int_distribution<Seconds>(1, cfg.boundaries.front())(rng);
            case 2: return std::uniform_int_distribution<Seconds>(1, d_max)(rng);
            default: return std::uniform_int_distribution<Seconds>(d_max, 2 * d_max)(rng);
        }
    };
    ClickEvent e;
    e.sample_id = id;
    e.click_ts = click;
    e.features = random_features(rng, schema);
    std::bernoulli_distribution half(0.5);
    if (half(rng)) e.conv_ts = click + delay();
    e.behavior_ts.assign(static_cast<std::size_t>(cfg.behaviors()), std::nullopt);
    for (int k = 0; k < cfg.behaviors(); ++k) {
        if (cfg.purchase_behavior && *cfg.purchase_behavior == k) {
            e.behavior_ts[static_cast<std::size_t>(k)] = e.conv_ts;
        } else if (half(rng)) {
            e.behavior_ts[static_cast<std::size_t>(k)] = click + delay();
        }
    }
    return e;
}

std::vector<ClickEvent> random_log(std::mt19937_64& rng, const HorizonConfig& cfg, const FeatureSchema& schema,
                                   std::size_t n, Seconds span) {
    std::uniform_int_distribution<Seconds> at(0, span);
    std::vector<Seconds> clicks(n);
    for (auto& c : clicks) c = at(rng);
    std::sort(clicks.begin(), clicks.end());
    std::vector<ClickEvent> log;
    log.reserve(n);
    for (std::size_t i = 0; i < n; ++i) log.push_back(random_event(rng, cfg, schema, static_cast<std::int64_t>(i), clicks[i]));
    return log;
}

TrajectoryView random_view(std::mt19937_64& rng, int windows, int behaviors) {
    TrajectoryView v = TrajectoryView::blank(windows, behaviors);
    const int visible = std::uniform_int_distribution<int>(0, windows)(rng);
    std::bernoulli_distribution flip(0.3);
    for (int h = 0; h < visible; ++h) {
        v.mask[static_cast<std::size_t>(h)] = 1;
        for (int k = 0; k < behaviors; ++k) {
            const auto idx = static_cast<std::size_t>(h * behaviors + k);
            const bool before = h > 0 && v.states[idx - static_cast<std::size_t>(behaviors)];
            v.states[idx] = before || flip(rng) ? 1 : 0;
        }
    }
    v.kappa = static_cast<double>(visible) / windows;
    return v;
}

TempDir::TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("trace-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<FeedbackArrival> AuditingSource::arrivals(Seconds lo, Seconds hi) {
    auto out = inner_.arrivals(lo, hi);
    ++reads_;
    if (hi > clock_) ++future_reads_;
    for (const auto& a : out) {
        if (a.ts > clock_) ++future_reads_;
    }
    return out;
}

int AuditingSource::ground_truth(std::size_t i, Reader who) {
    if (who == Reader::kBackbone) ++backbone_truth_reads_;
    return inner_.ground_truth(i, who);
}

const Synthetic& synthetic() {
    static const Synthetic s = [] {
        Synthetic out;
        out.spec.n_samples = 100000;
        out.spec.seed = 11;
        out.data = generate(out.spec);
        out.schema = out.spec.feature_schema();
        out.horizon = HorizonConfig{{120, 600, 7200, 86400, 259200}, out.spec.behavior_names(), out.spec.purchase_index()};
        const auto all = make_lifecycle_samples(out.data.log, out.horizon);
        const auto cut = all.size() * 4 / 5;
        out.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cut));
        out.test.assign(all.begin() + static_cast<std::ptrdiff_t>(cut), all.end());
        out.test_truth.assign(out.data.truth.begin() + static_cast<std::ptrdiff_t>(cut), out.data.truth.end());
        return out;
    }();
    return s;
}

PretrainConfig desk_pretrain(std::uint64_t seed) {
    PretrainConfig c;
    c.epochs = 20;
    c.patience = 5;
    c.batch_size = 256;
    c.shape.hidden = {64, 32};
    c.seed = seed;
    return c;
}

double auc_of(std::span<const double> scores, std::span<const int> labels) {
    std::vector<ScoredLabel> pairs;
    for (std::size_t i = 0; i < scores.size(); ++i) pairs.push_back({scores[i], labels[i]});
    return auc(pairs).value();
}

}  // namespace trace::testing
