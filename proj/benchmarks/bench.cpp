#include <benchmark/benchmark.h>

#include <random>

#include "trace/datagen.hpp"
#include "trace/log_io.hpp"
#include "trace/objective.hpp"
#include "trace/pipeline.hpp"

using namespace trace;

namespace {

std::vector<FeatureVector> features(std::size_t n) {
    GeneratorSpec g;
    g.n_samples = n;
    std::vector<FeatureVector> xs;
    for (const auto& e : generate(g).log) xs.push_back(e.features);
    return xs;
}

void BM_DenseNetForwardBackward(benchmark::State& state) {
    GeneratorSpec g;
    const auto schema = schema_for(g).features;
    StaticIntent m(schema, ModelShape{{64, 32}, 8}, 1);
    const auto xs = features(static_cast<std::size_t>(state.range(0)));
    const auto batch = StaticIntent::encode(xs);
    for (auto _ : state) {
        const Matrix z = m.net().forward(batch);
        benchmark::DoNotOptimize(m.net().backward(Matrix::Ones(z.rows(), z.cols())));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DenseNetForwardBackward)->Arg(256)->Arg(4096);

void BM_TraceObjective(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    std::vector<TraceExample> batch(static_cast<std::size_t>(state.range(0)));
    for (auto& e : batch) {
        e.logit1 = u(rng) - 0.5;
        e.score0 = -u(rng);
        e.score1 = -u(rng);
        for (int h = 0; h < 5; ++h) e.windows.push_back({0.2, u(rng), u(rng)});
        e.revealed = rng() % 2;
        e.label = static_cast<int>(rng() % 2);
        e.completer_q = u(rng);
        e.kappa = u(rng);
    }
    const TraceObjectiveConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(trace_objective(batch, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TraceObjective)->Arg(256)->Arg(4096);

// One replay over a small generated log, per backbone.
void BM_Replay(benchmark::State& state) {
    GeneratorSpec g;
    g.n_samples = 5000;
    const auto data = generate(g);
    const auto schema = schema_for(g);
    const auto horizon = horizon_for(schema, {120, 600, 7200, 86400, 259200});
    const auto parts = split_log(data.log, split_time(data.log, 0.3));
    PretrainConfig pc;
    pc.shape.hidden = {32, 16};
    pc.batch_size = 256;
    pc.epochs = 2;
    const auto bundle = pretrain_bundle(parts.pretrain, schema.features, horizon, pc, 2.0, true);
    BackboneOptions o;
    o.kind = state.range(0) ? BackboneKind::kTrace : BackboneKind::kVanilla;
    o.batch_size = 256;
    for (auto _ : state) {
        auto model = make_backbone(bundle, o);
        benchmark::DoNotOptimize(replay_from_split(data.log, bundle, *model, StreamConfig{}));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(parts.stream.size()));
}
BENCHMARK(BM_Replay)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
