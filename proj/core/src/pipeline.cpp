#include "trace/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trace {

LogSplit split_log(std::vector<ClickEvent> log, Seconds split_end) {
    LogSplit s;
    s.split_end = split_end;
    const auto mid = std::partition_point(log.begin(), log.end(), [&](const ClickEvent& e) { return e.click_ts <= split_end; });
    s.pretrain.assign(std::make_move_iterator(log.begin()), std::make_move_iterator(mid));
    s.stream.assign(std::make_move_iterator(mid), std::make_move_iterator(log.end()));
    return s;
}

Seconds split_time(std::span<const ClickEvent> log, double fraction) {
    if (log.empty()) throw std::invalid_argument("split_time: empty log");
    const Seconds first = log.front().click_ts, last = log.back().click_ts;
    return first + static_cast<Seconds>(std::floor(fraction * static_cast<double>(last - first)));
}

HorizonConfig horizon_for(const LogSchema& schema, std::vector<Seconds> boundaries) {
    HorizonConfig h{std::move(boundaries), schema.behaviors, schema.purchase};
    h.validate();
    return h;
}

ModelBundle pretrain_bundle(std::span<const ClickEvent> pretrain, const FeatureSchema& schema,
                            const HorizonConfig& horizon, const PretrainConfig& cfg, double beta, bool with_completer,
                            PretrainReport* report) {
    if (pretrain.empty()) throw std::invalid_argument("pretrain_bundle: empty pretraining split");
    const auto data = make_lifecycle_samples(pretrain, horizon);
    PretrainReport local;
    auto& r = report ? *report : local;
    auto intent = pretrain_static_intent(data, schema, cfg, &r.intent);
    auto likelihood = std::make_shared<TrajectoryLikelihood>(
        pretrain_trajectory_likelihood(data, schema, horizon, cfg, &r.likelihood));
    std::shared_ptr<const Completer> completer;
    if (with_completer) completer = std::make_shared<Completer>(pretrain_completer(data, schema, horizon, cfg, &r.completer));
    return ModelBundle{schema,
                       horizon,
                       std::move(intent),
                       std::move(likelihood),
                       std::move(completer),
                       pretrain_window_weights(data, beta),
                       pretrain.back().click_ts};
}

RunResult replay_from_split(std::span<const ClickEvent> log, const ModelBundle& bundle, Backbone& model,
                            StreamConfig cfg, const std::function<void(const StepRecord&)>& on_step) {
    if (!cfg.start) cfg.start = bundle.split_end;
    LogStreamSource source({log.begin(), log.end()}, bundle.horizon.d_max());
    return run_simulation(source, model, bundle.horizon, cfg, on_step);
}

BackboneOptions backbone_options(const RunConfig& cfg) {
    BackboneOptions o;
    o.kind = cfg.backbone;
    o.plugin = cfg.plugin;
    o.ablation = cfg.ablation;
    o.lambda = cfg.lambda;
    o.supervised = cfg.supervised;
    o.gate = cfg.gate;
    o.adam = cfg.adam;
    o.batch_size = cfg.batch_size;
    return o;
}

std::unique_ptr<Backbone> make_backbone(const ModelBundle& bundle, const BackboneOptions& o) {
    if (o.kind == BackboneKind::kTrace) {
        TraceBackboneConfig c;
        c.name = method_name(o.kind, false, o.ablation);
        c.objective.lambda = o.ablation.no_retro ? 0.0 : o.lambda;
        c.objective.supervised = o.supervised;
        c.objective.gate = o.gate;
        c.objective.use_trajectory = !o.ablation.no_traj;
        c.objective.use_gate = !o.ablation.no_gate;
        c.adam = o.adam;
        c.batch_size = o.batch_size;
        if (c.objective.lambda > 0 && !bundle.completer) {
            throw std::invalid_argument("bundle has no completer; pretrain with it or stream with no_retro");
        }
        return std::make_unique<TraceBackbone>(bundle.intent, bundle.likelihood, bundle.completer, bundle.window_weights,
                                               c);
    }
    BceBackboneConfig c;
    c.plugin.lambda = o.plugin ? o.lambda : 0.0;
    c.plugin.gate = o.gate;
    c.plugin.use_gate = !o.ablation.no_gate;
    c.adam = o.adam;
    c.batch_size = o.batch_size;
    if (c.plugin.lambda > 0 && !bundle.completer) throw std::invalid_argument("plug-in needs a bundle with a completer");
    const auto labels = o.kind == BackboneKind::kOracle ? LabelSource::kGroundTruth : LabelSource::kObserved;
    return std::make_unique<BceBackbone>(method_name(o.kind, o.plugin, o.ablation), labels, bundle.intent,
                                         bundle.completer, c);
}

}  // namespace trace
