#include <doctest.h>

#include <cmath>
#include <random>

#include "support/fixtures.hpp"
#include "trace/estimators.hpp"

using namespace trace;
using namespace trace::testing;

namespace {

const FeatureSchema kSchema{3, 2, 16};

ModelShape tiny_shape() { return ModelShape{{6, 4}, 2}; }

void zero_final_layer(DenseNet& net) {
    const int last = net.layer_count() - 1;
    net.weight(last).setZero();
    net.bias(last).setZero();
}

LikelihoodTable hand_table(int windows, int behaviors, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 0.95);
    LikelihoodTable t{windows, behaviors, {}};
    for (int i = 0; i < 2 * windows * behaviors; ++i) t.probs.push_back(u(rng));
    return t;
}

WindowWeights weights(std::vector<double> eta) {
    WindowWeights w;
    w.c_tilde.assign(eta.size(), 0.0);
    w.eta = std::move(eta);
    return w;
}

// Written out from the definitions: alpha over visible windows, Bernoulli
// product per window.
double brute_score(const LikelihoodTable& t, const TrajectoryView& v, int y, const std::vector<double>& eta) {
    double visible_eta = 0.0;
    for (int h = 0; h < v.windows; ++h) visible_eta += v.mask[static_cast<std::size_t>(h)] ? eta[static_cast<std::size_t>(h)] : 0.0;
    double s = 0.0;
    for (int h = 0; h < v.windows; ++h) {
        if (!v.mask[static_cast<std::size_t>(h)]) continue;
        double lik = 1.0;
        for (int k = 0; k < v.behaviors; ++k) {
            const double p = t.probs[static_cast<std::size_t>((y * t.windows + h) * t.behaviors + k)];
            lik *= v.state(h, k) ? p : 1.0 - p;
        }
        s += eta[static_cast<std::size_t>(h)] / (visible_eta + 1e-8) * std::log(lik);
    }
    return s;
}

}  // namespace

TEST_CASE("static intent posterior") {
    CHECK(posterior_from_logits(0.0, std::log(3.0)).p0 == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(posterior_from_logits(0.0, std::log(3.0)).p1 == doctest::Approx(0.75).epsilon(1e-12));

    std::mt19937_64 rng(1);
    StaticIntent m(kSchema, tiny_shape(), 5);
    for (int i = 0; i < 20; ++i) {
        const auto x = random_features(rng, kSchema);
        const auto p = static_posterior(m, x);
        const auto z = m.net().forward(x);
        const double e0 = std::exp(z(0)), e1 = std::exp(z(1));
        CHECK(p.p1 == doctest::Approx(e1 / (e0 + e1)).epsilon(1e-12));
        CHECK(p.p0 + p.p1 == doctest::Approx(1.0).epsilon(1e-15));
    }
    zero_final_layer(m.net());
    const auto p = static_posterior(m, random_features(rng, kSchema));
    CHECK(p.p0 == 0.5);
    CHECK(p.p1 == 0.5);
}

TEST_CASE("window likelihood") {
    SUBCASE("zero logits give one half") {
        const HorizonConfig h{{10, 100, 1000}, {"purchase"}, 0};
        TrajectoryLikelihood t(kSchema, h, tiny_shape(), 3);
        zero_final_layer(t.mutable_net());
        std::mt19937_64 rng(2);
        const auto x = random_features(rng, kSchema);
        for (int w = 0; w < 3; ++w) {
            for (int y = 0; y < 2; ++y) {
                for (std::uint8_t o = 0; o < 2; ++o) {
                    const std::vector<std::uint8_t> st{o};
                    CHECK(window_likelihood(t, x, w, y, st) == doctest::Approx(0.5).epsilon(1e-15));
                }
            }
        }
        CHECK_THROWS_AS(window_likelihood(t, x, 0, 0, std::vector<std::uint8_t>{0, 1}), std::invalid_argument);
    }
    SUBCASE("product over behaviors") {
        LikelihoodTable t{1, 3, {0.2, 0.2, 0.2, 0.9, 0.5, 0.1}};
        const std::vector<std::uint8_t> st{1, 0, 1};
        CHECK(t.window_likelihood(0, 1, st) == doctest::Approx(0.045).epsilon(1e-12));
    }
    SUBCASE("clamped away from zero") {
        LikelihoodTable t{1, 1, {0.0, 1.0}};
        const std::vector<std::uint8_t> st{1};
        CHECK(t.window_likelihood(0, 0, st) == kLikelihoodFloor);
    }
}

TEST_CASE("trajectory score") {
    std::mt19937_64 rng(4);
    SUBCASE("empty mask") {
        const auto t = hand_table(4, 2, rng);
        const auto v = TrajectoryView::blank(4, 2);
        CHECK(trajectory_score(t, v, 0, WindowWeights::uniform(4)) == 0.0);
        CHECK(trajectory_score(t, v, 1, WindowWeights::uniform(4)) == 0.0);
    }
    SUBCASE("single visible window") {
        const auto t = hand_table(4, 2, rng);
        auto v = TrajectoryView::blank(4, 2);
        v.mask[0] = 1;
        v.states[1] = 1;
        v.kappa = 0.25;
        const auto w = weights({0.1, 0.2, 0.3, 0.4});
        for (int y = 0; y < 2; ++y) {
            CHECK(trajectory_score(t, v, y, w) == doctest::Approx(std::log(t.window_likelihood(0, y, v.row(0)))).epsilon(1e-6));
        }
    }
    SUBCASE("matches a brute-force sum") {
        for (int trial = 0; trial < 200; ++trial) {
            const int H = 1 + static_cast<int>(rng() % 6), K = 1 + static_cast<int>(rng() % 3);
            const auto t = hand_table(H, K, rng);
            const auto v = random_view(rng, H, K);
            std::vector<double> eta(static_cast<std::size_t>(H));
            double sum = 0.0;
            for (auto& e : eta) sum += (e = 0.1 + static_cast<double>(rng() % 100) / 100.0);
            for (auto& e : eta) e /= sum;
            for (int y = 0; y < 2; ++y) {
                CHECK(trajectory_score(t, v, y, weights(eta)) == doctest::Approx(brute_score(t, v, y, eta)).epsilon(1e-12));
            }
        }
    }
    SUBCASE("masked-out states are ignored") {
        for (int trial = 0; trial < 200; ++trial) {
            const auto t = hand_table(5, 3, rng);
            auto v = random_view(rng, 5, 3);
            const double before = trajectory_score(t, v, 1, WindowWeights::uniform(5));
            for (int h = v.visible(); h < 5; ++h) {
                for (int k = 0; k < 3; ++k) v.states[static_cast<std::size_t>(h * 3 + k)] = static_cast<std::uint8_t>(rng() % 2);
            }
            CHECK(trajectory_score(t, v, 1, WindowWeights::uniform(5)) == before);
        }
    }
}

TEST_CASE("fusion") {
    std::mt19937_64 rng(6);
    SUBCASE("worked example") {
        const auto p = fuse({0.5, 0.5}, std::log(0.2), std::log(0.8));
        CHECK(p.p0 == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(p.p1 == doctest::Approx(0.8).epsilon(1e-12));
    }
    SUBCASE("equal scores keep the prior") {
        for (double s : {-3.0, 0.0, 2.5}) {
            const auto p = fuse({0.3, 0.7}, s, s);
            CHECK(p.p1 == doctest::Approx(0.7).epsilon(1e-12));
        }
    }
    SUBCASE("empty mask gives the static posterior exactly") {
        const HorizonConfig h = HorizonConfig::taobao();
        StaticIntent m(kSchema, tiny_shape(), 1);
        TrajectoryLikelihood t(kSchema, h, tiny_shape(), 2);
        for (int i = 0; i < 10; ++i) {
            const auto x = random_features(rng, kSchema);
            const auto f = fused_posterior(m, t, x, TrajectoryView::blank(5, 3), WindowWeights::uniform(5));
            const auto s = static_posterior(m, x);
            CHECK(f.p0 == s.p0);
            CHECK(f.p1 == s.p1);
        }
    }
    SUBCASE("sums to one and is shift invariant") {
        std::normal_distribution<double> n(0.0, 10.0);
        std::uniform_real_distribution<double> u(1e-6, 1.0 - 1e-6);
        for (int i = 0; i < 10000; ++i) {
            const double p1 = u(rng);
            const Posterior prior{1.0 - p1, p1};
            const double s0 = n(rng), s1 = n(rng), c = n(rng);
            const auto a = fuse(prior, s0, s1);
            CHECK(std::abs(a.p0 + a.p1 - 1.0) < 1e-9);
            const auto b = fuse(prior, s0 + c, s1 + c);
            CHECK(std::abs(a.p1 - b.p1) < 1e-9);
        }
    }
}

TEST_CASE("completer basics") {
    const HorizonConfig h = HorizonConfig::taobao();
    Completer c(kSchema, h, tiny_shape(), 3);
    zero_final_layer(c.mutable_net());
    std::mt19937_64 rng(8);
    for (int i = 0; i < 10; ++i) {
        CHECK(completer_posterior(c, random_features(rng, kSchema), random_view(rng, 5, 3)) == 0.5);
    }
    auto bad = TrajectoryView::blank(5, 3);
    bad.mask = {1, 0, 1, 0, 0};
    CHECK_THROWS_AS(completer_posterior(c, random_features(rng, kSchema), bad), std::invalid_argument);

    c.freeze();
    CHECK_THROWS_AS(c.mutable_net(), std::logic_error);
    TrajectoryLikelihood t(kSchema, h, tiny_shape(), 4);
    t.freeze();
    CHECK_THROWS_AS(t.mutable_net(), std::logic_error);
}

TEST_CASE("trained completer") {
    const auto& s = synthetic();
    const auto cfg = desk_pretrain(3);
    const auto completer = pretrain_completer(s.train, s.schema, s.horizon, cfg);
    const auto intent = pretrain_static_intent(s.train, s.schema, cfg);
    REQUIRE(completer.frozen());
    const int H = s.horizon.windows();
    const int purchase = *s.horizon.purchase_behavior;

    std::vector<FeatureVector> xs;
    std::vector<TrajectoryView> full, blank;
    std::vector<int> labels;
    for (const auto& x : s.test) {
        xs.push_back(x.x);
        full.push_back(x.full);
        blank.push_back(truncate(x.full, 0));
        labels.push_back(x.label);
    }

    SUBCASE("full trajectory with a purchase") {
        const auto q = completer.posteriors(xs, full);
        std::size_t bought = 0, confident = 0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (!full[i].state(H - 1, purchase)) continue;
            ++bought;
            confident += q[i] > 0.99;
        }
        REQUIRE(bought > 1000);
        MESSAGE("q > 0.99 on " << confident << " of " << bought);
        CHECK(static_cast<double>(confident) >= 0.99 * static_cast<double>(bought));
    }
    SUBCASE("blank trajectory ranks like a feature-only classifier") {
        const auto q = completer.posteriors(xs, blank);
        std::vector<double> prior;
        for (const auto& x : xs) prior.push_back(static_posterior(intent, x).p1);
        const double a_completer = auc_of(q, labels), a_static = auc_of(prior, labels);
        MESSAGE("k=0 completer AUC " << a_completer << ", feature-only AUC " << a_static);
        CHECK(std::abs(a_completer - a_static) < 0.01);
    }
}
