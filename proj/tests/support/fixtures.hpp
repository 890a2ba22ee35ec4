#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "trace/datagen.hpp"
#include "trace/event_model.hpp"
#include "trace/estimators.hpp"
#include "trace/pretraining.hpp"
#include "trace/streaming.hpp"

namespace trace::testing {

/// Random valid event under `cfg`: features per `schema`, a conversion with
/// probability 1/2 and delays spread across and beyond the horizon.
ClickEvent random_event(std::mt19937_64& rng, const HorizonConfig& cfg, const FeatureSchema& schema,
                        std::int64_t id = 0, Seconds click = 0);

std::vector<ClickEvent> random_log(std::mt19937_64& rng, const HorizonConfig& cfg, const FeatureSchema& schema,
                                   std::size_t n, Seconds span);

FeatureVector random_features(std::mt19937_64& rng, const FeatureSchema& schema);

/// Random trajectory with a prefix mask and cumulative states.
TrajectoryView random_view(std::mt19937_64& rng, int windows, int behaviors);

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    std::filesystem::path path;
};

std::string read_file(const std::filesystem::path& p);

/// Generated log split 80/20 by click time, shared by the model-quality tests.
struct Synthetic {
    GeneratorSpec spec;
    GeneratedData data;
    FeatureSchema schema;
    HorizonConfig horizon;
    std::vector<LifecycleSample> train;
    std::vector<LifecycleSample> test;
    std::vector<TruthRecord> test_truth;
};

/// Built once per process.
const Synthetic& synthetic();

// bayes_auc of the synthetic() truth table, computed once and pinned.
inline constexpr double kSyntheticBayesAuc = 0.77422333624349204;

/// Small networks and batches so the model-quality tests run in seconds.
PretrainConfig desk_pretrain(std::uint64_t seed = 1);

double auc_of(std::span<const double> scores, std::span<const int> labels);

/// Records every feedback timestamp the engine asks the source for, so a
/// test can check that no backbone-facing read reaches past the clock.
class AuditingSource final : public StreamSource {
public:
    explicit AuditingSource(LogStreamSource& inner) : inner_(inner) {}

    std::size_t size() const override { return inner_.size(); }
    int behaviors() const override { return inner_.behaviors(); }
    const ClickEvent& click(std::size_t i) const override { return inner_.click(i); }
    std::vector<FeedbackArrival> arrivals(Seconds lo, Seconds hi) override;
    int ground_truth(std::size_t i, Reader who) override;
    void on_clock(Seconds tau) override { clock_ = tau; }

    std::size_t reads() const { return reads_; }
    std::size_t future_reads() const { return future_reads_; }
    std::size_t backbone_truth_reads() const { return backbone_truth_reads_; }
    Seconds clock() const { return clock_; }

private:
    LogStreamSource& inner_;
    Seconds clock_ = 0;
    std::size_t reads_ = 0;
    std::size_t future_reads_ = 0;
    std::size_t backbone_truth_reads_ = 0;
};

}  // namespace trace::testing
