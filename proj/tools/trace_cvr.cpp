#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trace/config.hpp"
#include "trace/datagen.hpp"
#include "trace/log_io.hpp"
#include "trace/pipeline.hpp"
#include "trace/report.hpp"

namespace fs = std::filesystem;
using namespace trace;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

/// Bad flags, bad config values or missing inputs: exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_file(const fs::path& p, const std::string& what) {
    if (p.empty()) throw UsageError(what + " not given");
    if (!fs::is_regular_file(p)) throw UsageError(what + " '" + p.string() + "' does not exist");
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

std::string fmt_metric(const std::optional<double>& v) {
    if (!v) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

// Flags shared by pretrain and stream; each one overrides the config file.
struct CommonFlags {
    fs::path config;
    fs::path log;
    fs::path schema;
    std::optional<std::uint64_t> seed;
    std::optional<int> batch_size;
    std::optional<double> learning_rate;
    std::vector<int> hidden;
    std::string log_level;

    void add(CLI::App& cmd) {
        cmd.add_option("-c,--config", config, "Run configuration (INI)");
        cmd.add_option("--log", log, "Click log");
        cmd.add_option("--schema", schema, "Log schema (INI)");
        cmd.add_option("--seed", seed, "Seed");
        cmd.add_option("--batch-size", batch_size, "Mini-batch size");
        cmd.add_option("--lr", learning_rate, "Adam learning rate");
        cmd.add_option("--hidden", hidden, "Hidden layer widths")->delimiter(',');
        cmd.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");
    }

    RunConfig load() const {
        RunConfig c;
        if (!config.empty()) {
            require_file(config, "config");
            c = load_run_config(config);
        }
        if (!log.empty()) c.log = log;
        if (!schema.empty()) c.schema = schema;
        if (seed) c.seed = *seed;
        if (batch_size) c.batch_size = *batch_size;
        if (learning_rate) c.adam.learning_rate = *learning_rate;
        if (!hidden.empty()) c.shape.hidden = hidden;
        if (!log_level.empty()) c.log_level = log_level;
        return c;
    }
};

void set_log_level(const std::string& level) {
    const auto l = spdlog::level::from_str(level);
    if (l == spdlog::level::off && level != "off") throw UsageError("unknown log level '" + level + "'");
    spdlog::set_level(l);
}

struct LoadedLog {
    LogSchema schema;
    std::vector<ClickEvent> log;
};

LoadedLog load_log(const RunConfig& c) {
    require_file(c.schema, "schema");
    require_file(c.log, "log");
    LoadedLog l;
    l.schema = load_schema(c.schema);
    auto r = ingest(c.log, l.schema);
    for (const auto& w : r.warnings) spdlog::warn("{}: {}", c.log.string(), w);
    for (const auto& d : r.rejected) spdlog::warn("{}:{}: rejected: {}", c.log.string(), d.line, d.message);
    if (r.log.empty()) throw std::runtime_error(c.log.string() + ": no valid records");
    spdlog::info("loaded {} clicks ({} rejected)", r.log.size(), r.rejected.size());
    l.log = std::move(r.log);
    return l;
}

// ---- gen

struct GenArgs {
    fs::path spec;
    fs::path out;
    fs::path dump_spec;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
};

int cmd_gen(const GenArgs& a) {
    GeneratorSpec spec;
    if (!a.spec.empty()) {
        require_file(a.spec, "spec");
        spec = load_generator_spec(a.spec);
    }
    if (a.seed) spec.seed = *a.seed;
    if (a.samples) spec.n_samples = *a.samples;
    spec.validate();
    if (!a.dump_spec.empty()) {
        save_generator_spec(a.dump_spec, spec);
        if (a.out.empty()) return kOk;
    }
    if (a.out.empty()) throw UsageError("--out is required");
    fs::create_directories(a.out);

    const auto data = generate(spec);
    const auto schema = schema_for(spec);
    write_log(a.out / "log.csv", data.log, schema);
    write_truth(a.out / "truth.csv", data.truth);
    save_schema(a.out / "schema.ini", schema);
    save_generator_spec(a.out / "generator.ini", spec);

    std::size_t pos = 0;
    for (const auto& t : data.truth) pos += static_cast<std::size_t>(t.y);
    std::optional<double> bayes;
    try {
        bayes = bayes_auc(data.truth);
    } catch (const std::domain_error&) {
    }
    std::cout << "samples " << data.log.size() << " positives " << pos << " rate "
              << fmt_metric(data.log.empty() ? std::nullopt : std::optional(double(pos) / data.log.size()))
              << " bayes_auc " << fmt_metric(bayes) << " -> " << a.out.string() << '\n';
    return kOk;
}

// ---- pretrain

struct PretrainArgs {
    CommonFlags common;
    fs::path out;
    bool no_retro = false;
    std::optional<Seconds> split;
    std::optional<int> epochs;
};

int cmd_pretrain(const PretrainArgs& a) {
    auto c = a.common.load();
    if (a.split) c.split = *a.split;
    if (a.epochs) c.epochs = *a.epochs;
    if (!a.out.empty()) c.bundle = a.out;
    c.validate();
    set_log_level(c.log_level);
    if (c.bundle.empty()) throw UsageError("bundle directory not given (--out or [data] bundle)");

    auto loaded = load_log(c);
    const Seconds split_end = c.split ? *c.split : split_time(loaded.log, c.pretrain_fraction);
    const auto split = split_log(std::move(loaded.log), split_end);
    if (split.pretrain.empty()) throw UsageError("pretraining split is empty");
    const auto horizon = horizon_for(loaded.schema, c.boundaries);

    PretrainReport report;
    spdlog::info("pretraining on {} clicks up to t={}", split.pretrain.size(), split_end);
    const auto bundle =
        pretrain_bundle(split.pretrain, loaded.schema.features, horizon, c.pretrain_config(), c.beta, !a.no_retro, &report);
    save_bundle(c.bundle, bundle);

    const auto line = [](const char* name, const FitSummary& f) {
        std::cout << name << ": epochs " << f.epochs_run << " best " << f.best_epoch;
        if (!f.holdout_loss.empty()) std::cout << " holdout_loss " << fmt_metric(f.holdout_loss[f.best_epoch - 1]);
        std::cout << '\n';
    };
    line("static intent", report.intent);
    line("trajectory likelihood", report.likelihood);
    if (!a.no_retro) line("completer", report.completer);
    std::cout << "window weights";
    for (double e : bundle.window_weights.eta) std::cout << ' ' << fmt_metric(e);
    std::cout << "\nbundle -> " << c.bundle.string() << '\n';
    return kOk;
}

// ---- stream

struct StreamArgs {
    CommonFlags common;
    fs::path bundle;
    fs::path out;
    std::string backbone;
    bool plugin = false;
    std::vector<std::string> ablate;
    std::optional<Seconds> delta;
    std::optional<double> lambda;
    std::string supervised;
    bool full_prefix = false;
};

int cmd_stream(const StreamArgs& a) {
    auto c = a.common.load();
    if (!a.bundle.empty()) c.bundle = a.bundle;
    if (!a.out.empty()) c.output = a.out;
    if (!a.backbone.empty()) c.backbone = parse_backbone(a.backbone);
    if (a.plugin) c.plugin = true;
    for (const auto& x : a.ablate) apply_ablation(c.ablation, x);
    if (a.delta) c.delta = *a.delta;
    if (a.lambda) c.lambda = *a.lambda;
    if (!a.supervised.empty()) c.supervised = parse_supervised(a.supervised);
    if (a.full_prefix) c.full_prefix = true;
    c.validate();
    set_log_level(c.log_level);
    if (c.bundle.empty()) throw UsageError("bundle directory not given (--bundle or [data] bundle)");
    if (!fs::is_regular_file(c.bundle / kManifestName)) {
        throw UsageError("no model bundle at '" + c.bundle.string() + "'; run pretrain first");
    }

    const auto loaded = load_log(c);
    const auto bundle = load_bundle(c.bundle);
    if (!(bundle.schema == loaded.schema.features)) throw UsageError("log schema does not match the bundle's schema");
    if (static_cast<std::size_t>(bundle.horizon.behaviors()) != loaded.schema.behaviors.size()) {
        throw UsageError("log behaviors do not match the bundle's horizon config");
    }

    auto model = make_backbone(bundle, backbone_options(c));
    auto cfg = c.stream_config();
    cfg.start = bundle.split_end;
    LogStreamSource source(loaded.log, bundle.horizon.d_max());
    StreamEngine engine(source, *model, bundle.horizon, cfg);
    spdlog::info("streaming {} with delta={}s from t={}", model->name(), c.delta, bundle.split_end);

    std::vector<StepRecord> steps;
    while (!engine.finished()) {
        const auto before = engine.intervals().size();
        const auto& rec = engine.step();
        if (engine.intervals().size() > before) {
            const auto m = evaluate_interval(engine.intervals().back());
            spdlog::info("interval {} n={} pos={} auc={} nll={} ece={}", m.interval_start, m.n, m.n_pos,
                         fmt_metric(m.auc), fmt_metric(m.nll), fmt_metric(m.ece));
        }
        for (const auto& l : rec.losses) {
            spdlog::debug("step {} tau={} l_trj={:.6f} l_sup={:.6f} l_con={:.6f} total={:.6f}", rec.step, rec.tau,
                          l.l_trj, l.l_sup, l.l_con, l.total);
        }
        steps.push_back(rec);
    }

    const auto report = engine.report(model->name());
    fs::create_directories(c.output);
    const auto stem = c.output / model->name();
    {
        auto out = open_out(stem.string() + ".report");
        write_report(out, report);
    }
    {
        auto out = open_out(stem.string() + "_intervals.csv");
        write_interval_csv(out, report);
    }
    {
        auto out = open_out(stem.string() + "_training.csv");
        write_training_log(out, steps);
    }
    const auto& m = report.aggregate.mean;
    std::cout << model->name() << ": auc " << fmt_metric(m.auc) << " nll " << fmt_metric(m.nll) << " pr_auc "
              << fmt_metric(m.pr_auc) << " ece " << fmt_metric(m.ece) << " over " << report.aggregate.intervals
              << " intervals -> " << stem.string() << ".report\n";
    return kOk;
}

// ---- report

struct ReportArgs {
    std::vector<fs::path> inputs;
    fs::path csv;
};

int cmd_report(const ReportArgs& a) {
    std::vector<MetricReport> reports;
    for (const auto& p : a.inputs) {
        require_file(p, "report");
        std::ifstream in(p);
        try {
            reports.push_back(read_report(in));
        } catch (const std::runtime_error& e) {
            throw UsageError(p.string() + ": " + e.what());
        }
    }
    write_comparison_table(std::cout, reports);
    if (!a.csv.empty()) {
        auto out = open_out(a.csv);
        write_comparison_csv(out, reports);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming delayed-feedback CVR engine with trajectory-conditioned training"};
    app.require_subcommand(1);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_default_logger(spdlog::stderr_color_st("trace_cvr"));

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a synthetic click log with ground truth");
    g->add_option("--spec", gen.spec, "Generator spec (INI); defaults when omitted");
    g->add_option("-o,--out", gen.out, "Output directory");
    g->add_option("--seed", gen.seed, "Seed, overriding the generator spec");
    g->add_option("-n,--samples", gen.samples, "Number of clicks, overriding the generator spec");
    g->add_option("--dump-spec", gen.dump_spec, "Write the effective spec to this file");

    PretrainArgs pre;
    auto* p = app.add_subcommand("pretrain", "Pretrain the static intent, likelihood, completer and window weights");
    pre.common.add(*p);
    p->add_option("-o,--out", pre.out, "Bundle directory");
    p->add_flag("--no-retro", pre.no_retro, "Skip the completer");
    p->add_option("--split", pre.split, "Last click time of the pretraining split");
    p->add_option("--epochs", pre.epochs, "Maximum epochs per model");

    StreamArgs st;
    auto* s = app.add_subcommand("stream", "Replay the log under predict-then-update");
    st.common.add(*s);
    s->add_option("--bundle", st.bundle, "Bundle directory");
    s->add_option("-o,--out", st.out, "Output directory");
    s->add_option("--backbone", st.backbone, "trace, vanilla or oracle");
    s->add_flag("--plugin", st.plugin, "Add the gated consistency term to vanilla or oracle");
    s->add_option("--ablate", st.ablate, "no_traj, no_retro or no_gate (repeatable)");
    s->add_option("--delta", st.delta, "Sliding interval in seconds");
    s->add_option("--lambda", st.lambda, "Consistency weight");
    s->add_option("--supervised", st.supervised, "Posterior of the supervised term: static or fused");
    s->add_flag("--full-prefix", st.full_prefix, "Retrain on every clicked sample each step");

    ReportArgs rep;
    auto* r = app.add_subcommand("report", "Merge run reports into one comparison table");
    r->add_option("reports", rep.inputs, "Report files")->required();
    r->add_option("--csv", rep.csv, "Also write the table as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*g) return cmd_gen(gen);
        if (*p) return cmd_pretrain(pre);
        if (*s) return cmd_stream(st);
        if (*r) return cmd_report(rep);
    } catch (const UsageError& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    } catch (const std::invalid_argument& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kRuntime;
    }
    return kUsage;
}
