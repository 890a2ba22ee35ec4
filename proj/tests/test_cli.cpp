#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support/fixtures.hpp"

using namespace trace::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

// Runs the CLI with stdout captured to a file and stderr discarded.
Run cli(const fs::path& work, const std::string& args) {
    const auto out = work / "stdout.txt";
    const std::string cmd = std::string("\"") + TRACE_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                            (work / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out);
    return r;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

// Small enough to pretrain and stream in seconds.
constexpr const char* kRunConfig =
    "[model]\nhidden = 8\nembedding_dim = 4\n"
    "[optim]\nbatch_size = 128\n"
    "[pretrain]\nepochs = 2\n"
    "[stream]\ndelta = 7200\n"
    "[horizon]\nboundaries = 600, 7200, 86400\n";

struct Workspace {
    TempDir dir{"cli"};
    fs::path data = dir.path / "data";
    fs::path cfg = dir.path / "run.ini";

    Workspace() {
        write_text(cfg, kRunConfig);
        REQUIRE(cli(dir.path, "gen -n 3000 --seed 7 -o " + data.string()).code == 0);
    }
    std::string inputs() const {
        return "-c " + cfg.string() + " --log " + (data / "log.csv").string() + " --schema " + (data / "schema.ini").string();
    }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
    TempDir dir("cli-usage");
    CHECK(cli(dir.path, "").code == 2);
    CHECK(cli(dir.path, "frobnicate").code == 2);
    CHECK(cli(dir.path, "gen --no-such-flag").code == 2);
    CHECK(cli(dir.path, "gen --spec " + (dir.path / "missing.spec").string() + " -o " + dir.path.string()).code == 2);
    CHECK(cli(dir.path, "gen").code == 2);  // no --out
    write_text(dir.path / "bad.spec", "[generator]\nfast_mean = -3\n");
    CHECK(cli(dir.path, "gen --spec " + (dir.path / "bad.spec").string() + " -o " + dir.path.string()).code == 2);
    write_text(dir.path / "bad.ini", "[stream]\ndleta = 60\n");
    CHECK(cli(dir.path, "pretrain -c " + (dir.path / "bad.ini").string()).code == 2);
    CHECK(cli(dir.path, "stream --log x.csv --schema y.ini --bundle nowhere").code == 2);
    CHECK(cli(dir.path, "report").code == 2);
    CHECK(cli(dir.path, "--help").code == 0);
}

TEST_CASE("gen") {
    TempDir dir("cli-gen");
    const auto a = dir.path / "a", b = dir.path / "b", c = dir.path / "c";
    const auto r = cli(dir.path, "gen -n 2000 --seed 7 -o " + a.string());
    CHECK(r.code == 0);
    CHECK(r.out.find("samples 2000") != std::string::npos);
    CHECK(cli(dir.path, "gen -n 2000 --seed 7 -o " + b.string()).code == 0);
    CHECK(cli(dir.path, "gen -n 2000 --seed 8 -o " + c.string()).code == 0);
    for (const char* f : {"log.csv", "truth.csv", "schema.ini", "generator.ini"}) {
        INFO(f);
        REQUIRE(fs::exists(a / f));
        CHECK(read_file(a / f) == read_file(b / f));
    }
    CHECK(read_file(a / "log.csv") != read_file(c / "log.csv"));

    // The written spec regenerates the same data.
    CHECK(cli(dir.path, "gen --spec " + (a / "generator.ini").string() + " -o " + c.string()).code == 0);
    CHECK(read_file(a / "log.csv") == read_file(c / "log.csv"));
    CHECK(cli(dir.path, "gen --dump-spec " + (dir.path / "default.ini").string()).code == 0);
    CHECK(fs::exists(dir.path / "default.ini"));
}

TEST_CASE("pretrain, stream and report") {
    Workspace w;
    const auto bundle = w.dir.path / "bundle";
    const auto out = w.dir.path / "runs";

    const auto p = cli(w.dir.path, "pretrain " + w.inputs() + " -o " + bundle.string());
    REQUIRE(p.code == 0);
    CHECK(p.out.find("completer") != std::string::npos);
    for (const char* f : {"manifest.json", "static.ckpt", "likelihood.ckpt", "completer.ckpt", "window_weights.txt"}) {
        CHECK(fs::exists(bundle / f));
    }

    SUBCASE("pretraining is deterministic") {
        const auto again = w.dir.path / "again";
        REQUIRE(cli(w.dir.path, "pretrain " + w.inputs() + " -o " + again.string()).code == 0);
        for (const char* f : {"manifest.json", "static.ckpt", "likelihood.ckpt", "completer.ckpt", "window_weights.txt"}) {
            INFO(f);
            CHECK(read_file(bundle / f) == read_file(again / f));
        }
    }
    SUBCASE("no-retro bundle") {
        const auto nr = w.dir.path / "no_retro";
        REQUIRE(cli(w.dir.path, "pretrain " + w.inputs() + " --no-retro -o " + nr.string()).code == 0);
        CHECK_FALSE(fs::exists(nr / "completer.ckpt"));
        CHECK(cli(w.dir.path, "stream " + w.inputs() + " --bundle " + nr.string() + " -o " + out.string()).code == 2);
        CHECK(cli(w.dir.path, "stream " + w.inputs() + " --bundle " + nr.string() + " --ablate no_retro -o " + out.string())
                  .code == 0);
        CHECK(fs::exists(out / "trace-no_retro.report"));
    }
    SUBCASE("streams, reports and comparison") {
        const auto t = cli(w.dir.path, "stream " + w.inputs() + " --bundle " + bundle.string() + " -o " + out.string());
        REQUIRE(t.code == 0);
        CHECK(t.out.rfind("trace: auc ", 0) == 0);
        REQUIRE(cli(w.dir.path, "stream " + w.inputs() + " --bundle " + bundle.string() + " --backbone vanilla -o " +
                                    out.string())
                    .code == 0);
        REQUIRE(cli(w.dir.path, "stream " + w.inputs() + " --bundle " + bundle.string() + " --ablate no_gate -o " +
                                    out.string())
                    .code == 0);
        for (const char* f : {"trace.report", "trace_intervals.csv", "trace_training.csv", "vanilla.report",
                              "trace-no_gate.report"}) {
            CHECK(fs::exists(out / f));
        }
        CHECK(read_file(out / "trace_intervals.csv").rfind("interval_start,n,n_pos,auc,nll,pr_auc,ece\n", 0) == 0);

        // Same inputs and seed give the same report.
        const auto rerun = w.dir.path / "rerun";
        REQUIRE(cli(w.dir.path, "stream " + w.inputs() + " --bundle " + bundle.string() + " -o " + rerun.string()).code == 0);
        CHECK(read_file(out / "trace.report") == read_file(rerun / "trace.report"));

        const auto csv = w.dir.path / "table.csv";
        const auto r = cli(w.dir.path, "report " + (out / "trace.report").string() + " " + (out / "vanilla.report").string() +
                                           " --csv " + csv.string());
        REQUIRE(r.code == 0);
        std::istringstream lines(r.out);
        std::string header, first, second;
        std::getline(lines, header);
        std::getline(lines, first);
        std::getline(lines, second);
        CHECK(header.rfind("Method", 0) == 0);
        CHECK(first.rfind("trace ", 0) == 0);
        CHECK(second.rfind("vanilla ", 0) == 0);
        const auto table = read_file(csv);
        CHECK(table.rfind("method,auc,nll,pr_auc,ece,pooled_auc,pooled_nll,intervals\ntrace,", 0) == 0);

        const auto single = cli(w.dir.path, "report " + (out / "trace.report").string());
        CHECK(single.code == 0);
        CHECK(single.out.find("vanilla") == std::string::npos);

        write_text(w.dir.path / "junk.report", "not a report\n");
        CHECK(cli(w.dir.path, "report " + (w.dir.path / "junk.report").string()).code == 2);
    }
    SUBCASE("stream errors") {
        CHECK(cli(w.dir.path, "stream " + w.inputs() + " --bundle " + bundle.string() + " --backbone psychic").code == 2);
        CHECK(cli(w.dir.path, "stream " + w.inputs() + " --bundle " + bundle.string() + " --backbone vanilla --ablate no_gate")
                  .code == 2);
        CHECK(cli(w.dir.path, "stream " + w.inputs() + " --bundle " + bundle.string() + " --log-level shouty").code == 2);
    }
}
