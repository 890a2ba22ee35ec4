#include <doctest.h>

#include <cmath>
#include <random>

#include "support/fixtures.hpp"
#include "trace/losses.hpp"
#include "trace/pretraining.hpp"
#include "trace/window_weights.hpp"

using namespace trace;
using namespace trace::testing;

namespace {

TrajectoryView one_bit(std::uint8_t o) {
    auto v = TrajectoryView::blank(1, 1);
    v.mask[0] = 1;
    v.states[0] = o;
    v.kappa = 1.0;
    return v;
}

std::vector<double> entropies(const std::vector<std::pair<int, int>>& obs_label) {
    std::vector<TrajectoryView> views;
    std::vector<int> labels;
    for (auto [o, y] : obs_label) {
        views.push_back(one_bit(static_cast<std::uint8_t>(o)));
        labels.push_back(y);
    }
    return conditional_entropy_per_window(views, labels);
}

// Closed form of the weighting rule with 1-based h.
std::vector<double> brute_eta(const std::vector<double>& c_tilde, double beta) {
    const auto H = static_cast<double>(c_tilde.size());
    std::vector<double> raw;
    double sum = 0.0;
    for (std::size_t i = 0; i < c_tilde.size(); ++i) {
        const double h = static_cast<double>(i + 1);
        raw.push_back(std::exp(-h / H - beta * c_tilde[i]) / (H - h + 1.0));
        sum += raw.back();
    }
    for (auto& r : raw) r /= sum;
    return raw;
}

// Chi-square critical values at p = 0.01.
double chi2_critical_01(int dof) {
    static const double table[] = {0, 6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475};
    return table[dof];
}

}  // namespace

TEST_CASE("conditional entropy examples") {
    SUBCASE("label independent of the state") {
        const auto h = entropies({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
        CHECK(h[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("state determines the label") {
        const auto h = entropies({{0, 0}, {0, 0}, {1, 1}, {1, 1}, {1, 1}});
        CHECK(h[0] == 0.0);
    }
    SUBCASE("four-sample toy set") {
        const auto h = entropies({{0, 0}, {0, 0}, {1, 1}, {1, 0}});
        CHECK(h[0] == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
        CHECK(h[0] == doctest::Approx(0.3466).epsilon(1e-4));
    }
    SUBCASE("joint state over behaviors") {
        // Each behavior alone is uninformative; the pair determines y.
        std::vector<TrajectoryView> views;
        std::vector<int> labels;
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                auto v = TrajectoryView::blank(1, 2);
                v.mask[0] = 1;
                v.states = {static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)};
                v.kappa = 1.0;
                views.push_back(v);
                labels.push_back(a ^ b);
            }
        }
        CHECK(conditional_entropy_per_window(views, labels)[0] == 0.0);
    }
    CHECK_THROWS(conditional_entropy_per_window(std::vector<TrajectoryView>{}, std::vector<int>{}));
}

TEST_CASE("window weights") {
    SUBCASE("two windows with equal entropies") {
        const std::vector<double> e{0.3, 0.3};
        const auto w = compute_window_weights(e, 2.0);
        CHECK(w.c_tilde == std::vector<double>{1.0, 1.0});
        CHECK(w.eta[0] == doctest::Approx(0.4518).epsilon(1e-4));
        CHECK(w.eta[1] == doctest::Approx(0.5482).epsilon(1e-4));
    }
    SUBCASE("single window, zero entropy, beta 0") {
        const std::vector<double> e{0.0};
        const auto w = compute_window_weights(e, 0.0);
        CHECK(w.eta == std::vector<double>{1.0});
    }
    SUBCASE("random entropies against the closed form") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.0, 0.7);
        for (int trial = 0; trial < 200; ++trial) {
            const auto H = 1 + rng() % 8;
            std::vector<double> e(H);
            for (auto& x : e) x = u(rng);
            const double beta = u(rng) * 5.0;
            const auto w = compute_window_weights(e, beta);
            const double mx = *std::max_element(e.begin(), e.end());
            std::vector<double> c;
            for (double x : e) c.push_back(mx > 0 ? x / mx : 0.0);
            const auto ref = brute_eta(c, beta);
            double sum = 0.0;
            for (std::size_t h = 0; h < H; ++h) {
                CHECK(w.eta[h] > 0.0);
                CHECK(w.eta[h] == doctest::Approx(ref[h]).epsilon(1e-12));
                sum += w.eta[h];
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);

            // Uniform scaling of the raw entropies changes nothing.
            std::vector<double> scaled(e);
            for (auto& x : scaled) x *= 3.7;
            const auto ws = compute_window_weights(scaled, beta);
            for (std::size_t h = 0; h < H; ++h) CHECK(ws.eta[h] == doctest::Approx(w.eta[h]).epsilon(1e-12));
        }
    }
    SUBCASE("eta decreases in c_tilde at a fixed window") {
        for (double beta : {0.5, 2.0, 4.0}) {
            for (int h = 1; h <= 5; ++h) {
                double prev = std::numeric_limits<double>::infinity();
                for (double c : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                    const double raw = std::exp(-h / 5.0 - beta * c) / (5.0 - h + 1.0);
                    CHECK(raw < prev);
                    prev = raw;
                }
            }
            // Raising one window's entropy lowers its normalized weight.
            const std::vector<double> lo{0.2, 0.4, 0.6, 1.0}, hi{0.2, 0.8, 0.6, 1.0};
            CHECK(compute_window_weights(hi, beta).eta[1] < compute_window_weights(lo, beta).eta[1]);
        }
    }
    SUBCASE("text round trip") {
        TempDir dir("ww");
        const std::vector<double> e{0.1, 0.5, 0.3};
        const auto w = compute_window_weights(e, 2.0);
        save_window_weights(dir.path / "w.txt", w);
        const auto back = load_window_weights(dir.path / "w.txt");
        CHECK(back.beta == w.beta);
        CHECK(back.eta == w.eta);
        CHECK(back.c_tilde == w.c_tilde);
        CHECK_THROWS(load_window_weights(dir.path / "missing.txt"));
    }
}

TEST_CASE("truncation draws are uniform") {
    for (int min_k : {0, 1}) {
        std::mt19937_64 rng(99);
        const int H = 5, n = 100000;
        std::vector<int> counts(static_cast<std::size_t>(H + 1), 0);
        for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(draw_truncation(rng, H, min_k))];
        const int cells = H - min_k + 1;
        const double expected = static_cast<double>(n) / cells;
        double chi2 = 0.0;
        for (int k = 0; k <= H; ++k) {
            if (k < min_k) {
                CHECK(counts[static_cast<std::size_t>(k)] == 0);
                continue;
            }
            const double d = counts[static_cast<std::size_t>(k)] - expected;
            chi2 += d * d / expected;
        }
        MESSAGE("min_k " << min_k << " chi-square " << chi2);
        CHECK(chi2 < chi2_critical_01(cells - 1));
    }
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(draw_truncation(rng, 3, 4), std::invalid_argument);
}

TEST_CASE("degenerate fits") {
    const FeatureSchema schema{2, 1, 4};
    PretrainConfig cfg;
    cfg.epochs = 300;
    cfg.batch_size = 1;
    cfg.holdout_fraction = 0.0;
    cfg.adam.learning_rate = 0.01;
    cfg.shape = ModelShape{{8}, 2};

    SUBCASE("likelihood of an all-ones trajectory") {
        const HorizonConfig h{{10, 100, 1000}, {"purchase"}, 0};
        LifecycleSample s{{{0.3, -1.2}, {2}}, TrajectoryView::blank(3, 1), 1};
        s.full.mask = {1, 1, 1};
        s.full.states = {1, 1, 1};
        s.full.kappa = 1.0;
        const std::vector<LifecycleSample> data{s};
        const auto t = pretrain_trajectory_likelihood(data, schema, h, cfg);
        CHECK(t.frozen());
        const auto table = t.table(s.x);
        for (int w = 0; w < 3; ++w) CHECK(table.prob(1, w, 0) > 0.99);
    }
    SUBCASE("all-positive labels") {
        std::mt19937_64 rng(2);
        std::vector<LifecycleSample> data;
        for (int i = 0; i < 20; ++i) data.push_back({random_features(rng, schema), TrajectoryView::blank(1, 1), 1});
        cfg.epochs = 20;
        const auto m = pretrain_static_intent(data, schema, cfg);
        for (const auto& s : data) CHECK(static_posterior(m, s.x).p1 > 0.99);
    }
    SUBCASE("linearly separable data") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> n(0.0, 1.0);
        std::vector<LifecycleSample> data;
        while (data.size() < 2000) {
            const double a = n(rng), b = n(rng);
            const double m = a + 0.5 * b;
            if (std::abs(m) < 0.1) continue;
            data.push_back({{{a, b}, {static_cast<std::uint32_t>(rng() % 4)}}, TrajectoryView::blank(1, 1), m > 0 ? 1 : 0});
        }
        cfg.epochs = 30;
        cfg.batch_size = 64;
        const auto model = pretrain_static_intent(data, schema, cfg);
        int correct = 0;
        for (const auto& s : data) correct += (static_posterior(model, s.x).p1 > 0.5) == (s.label == 1);
        CHECK(correct > 0.99 * static_cast<double>(data.size()));
    }
    SUBCASE("empty data and bad settings") {
        const std::vector<LifecycleSample> none;
        CHECK_THROWS_AS(pretrain_static_intent(none, schema, cfg), std::invalid_argument);
        std::mt19937_64 rng(4);
        const std::vector<LifecycleSample> one{{random_features(rng, schema), TrajectoryView::blank(1, 1), 0}};
        cfg.epochs = 0;
        CHECK_THROWS_AS(pretrain_static_intent(one, schema, cfg), std::invalid_argument);
    }
}

TEST_CASE("pretraining is deterministic") {
    const auto& s = synthetic();
    const std::vector<LifecycleSample> data(s.train.begin(), s.train.begin() + 3000);
    auto cfg = desk_pretrain(5);
    cfg.epochs = 2;
    FitSummary a, b;
    CHECK(pretrain_static_intent(data, s.schema, cfg, &a).net().checksum() ==
          pretrain_static_intent(data, s.schema, cfg, &b).net().checksum());
    CHECK(a.holdout_loss == b.holdout_loss);
    CHECK(pretrain_trajectory_likelihood(data, s.schema, s.horizon, cfg).net().checksum() ==
          pretrain_trajectory_likelihood(data, s.schema, s.horizon, cfg).net().checksum());
    CHECK(pretrain_completer(data, s.schema, s.horizon, cfg).net().checksum() ==
          pretrain_completer(data, s.schema, s.horizon, cfg).net().checksum());
    const auto w1 = pretrain_window_weights(data, 2.0), w2 = pretrain_window_weights(data, 2.0);
    CHECK(w1.eta == w2.eta);
    auto other = cfg;
    other.seed = 6;
    CHECK(pretrain_static_intent(data, s.schema, other).net().checksum() !=
          pretrain_static_intent(data, s.schema, cfg).net().checksum());
}

TEST_CASE("pretrained models on synthetic data") {
    const auto& s = synthetic();
    const auto cfg = desk_pretrain(7);
    std::vector<FeatureVector> xs;
    std::vector<int> labels;
    for (const auto& t : s.test) {
        xs.push_back(t.x);
        labels.push_back(t.label);
    }
    FitSummary fit;
    const auto intent = pretrain_static_intent(s.train, s.schema, cfg, &fit);
    CHECK(fit.best_epoch >= 1);
    CHECK(fit.best_epoch <= fit.epochs_run);
    std::vector<double> prior;
    for (const auto& x : xs) prior.push_back(static_posterior(intent, x).p1);
    const double static_auc = auc_of(prior, labels);

    SUBCASE("static intent reaches the Bayes AUC") {
        const double bayes = bayes_auc(s.test_truth);
        MESSAGE("static AUC " << static_auc << ", Bayes AUC " << bayes);
        CHECK(static_auc > bayes - 0.02);
    }
    SUBCASE("likelihood marginals match the data") {
        const auto t = pretrain_trajectory_likelihood(s.train, s.schema, s.horizon, cfg);
        const int H = s.horizon.windows(), K = s.horizon.behaviors();
        const int purchase = *s.horizon.purchase_behavior;
        const auto tables = t.tables(xs);
        double gap = 0.0;
        for (int h = 0; h < H; ++h) {
            double predicted = 0.0, empirical = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                predicted += tables[i].prob(labels[i], h, purchase);
                empirical += s.test[i].full.state(h, purchase);
            }
            const auto n = static_cast<double>(xs.size());
            MESSAGE("window " << h << " predicted " << predicted / n << " empirical " << empirical / n);
            gap += std::abs(predicted - empirical) / n;
        }
        CHECK(gap / H < 0.02);
        // Every behavior's marginal, not only the purchase.
        for (int k = 0; k < K; ++k) {
            double g = 0.0;
            for (int h = 0; h < H; ++h) {
                double predicted = 0.0, empirical = 0.0;
                for (std::size_t i = 0; i < xs.size(); ++i) {
                    predicted += tables[i].prob(labels[i], h, k);
                    empirical += s.test[i].full.state(h, k);
                }
                g += std::abs(predicted - empirical) / static_cast<double>(xs.size());
            }
            CHECK(g / H < 0.02);
        }
    }
    SUBCASE("completer") {
        FitSummary cfit;
        const auto c = pretrain_completer(s.train, s.schema, s.horizon, cfg, &cfit);
        std::vector<TrajectoryView> full, first;
        for (const auto& t : s.test) {
            full.push_back(t.full);
            first.push_back(truncate(t.full, 1));
        }
        const auto qf = c.posteriors(xs, full);
        double loss = 0.0;
        for (std::size_t i = 0; i < qf.size(); ++i) loss += bce(qf[i], labels[i]);
        loss /= static_cast<double>(qf.size());
        MESSAGE("completer loss at k = H: " << loss);
        CHECK(loss < 0.05);
        // The first window already shows fast carts and purchases here, so the
        // completer may exceed the feature-only model but must not fall below it.
        const double first_auc = auc_of(c.posteriors(xs, first), labels);
        MESSAGE("k=1 completer AUC " << first_auc << ", feature-only AUC " << static_auc);
        CHECK(first_auc > static_auc - 0.02);
    }
}

TEST_CASE("completer at k = 1 without early behaviors") {
    // Purchase is the only tracked behavior, so the first window reveals
    // almost nothing and the completer should rank like the features alone.
    GeneratorSpec spec;
    spec.n_samples = 60000;
    spec.seed = 12;
    spec.behaviors.clear();
    const auto data = generate(spec);
    const HorizonConfig horizon{{120, 600, 7200, 86400, 259200}, spec.behavior_names(), spec.purchase_index()};
    REQUIRE(horizon.behaviors() == 1);
    const auto all = make_lifecycle_samples(data.log, horizon);
    const auto cut = static_cast<std::ptrdiff_t>(all.size() * 4 / 5);
    const std::vector<LifecycleSample> train(all.begin(), all.begin() + cut), test(all.begin() + cut, all.end());

    const auto cfg = desk_pretrain(8);
    const auto schema = spec.feature_schema();
    const auto intent = pretrain_static_intent(train, schema, cfg);
    const auto c = pretrain_completer(train, schema, horizon, cfg);
    std::vector<FeatureVector> xs;
    std::vector<TrajectoryView> first;
    std::vector<int> labels;
    std::vector<double> prior;
    for (const auto& t : test) {
        xs.push_back(t.x);
        first.push_back(truncate(t.full, 1));
        labels.push_back(t.label);
        prior.push_back(static_posterior(intent, t.x).p1);
    }
    const double first_auc = auc_of(c.posteriors(xs, first), labels), static_auc = auc_of(prior, labels);
    MESSAGE("k=1 completer AUC " << first_auc << ", feature-only AUC " << static_auc);
    CHECK(std::abs(first_auc - static_auc) < 0.02);
}
