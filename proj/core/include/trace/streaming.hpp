#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "trace/event_model.hpp"
#include "trace/losses.hpp"
#include "trace/metrics.hpp"
#include "trace/report.hpp"

namespace trace {

/// Who asks the environment for a ground-truth label.
enum class Reader { kEvaluator, kBackbone };

/// A feedback event becoming visible: a conversion (behavior = -1) or the
/// first occurrence of a tracked behavior.
struct FeedbackArrival {
    std::size_t index = 0;
    int behavior = -1;
    Seconds ts = 0;
};

/// The environment a replay runs against. Clicks expose pre-click
/// information only; feedback is released through arrivals().
class StreamSource {
public:
    virtual ~StreamSource() = default;

    virtual std::size_t size() const = 0;
    virtual int behaviors() const = 0;
    /// Click without feedback: conv_ts and behavior timestamps are empty.
    virtual const ClickEvent& click(std::size_t i) const = 0;
    /// Feedback with timestamps in (lo, hi], ordered by time.
    virtual std::vector<FeedbackArrival> arrivals(Seconds lo, Seconds hi) = 0;
    virtual int ground_truth(std::size_t i, Reader who) = 0;
    /// Called whenever the replay clock moves.
    virtual void on_clock(Seconds /*tau*/) {}
};

/// StreamSource over a fully known log, sorted by click time.
class LogStreamSource : public StreamSource {
public:
    LogStreamSource(std::vector<ClickEvent> log, Seconds d_max);

    std::size_t size() const override { return clicks_.size(); }
    int behaviors() const override { return behaviors_; }
    const ClickEvent& click(std::size_t i) const override { return clicks_.at(i); }
    std::vector<FeedbackArrival> arrivals(Seconds lo, Seconds hi) override;
    int ground_truth(std::size_t i, Reader who) override;

private:
    std::vector<ClickEvent> clicks_;
    std::vector<int> labels_;
    std::vector<FeedbackArrival> feedback_;
    int behaviors_ = 0;
};

/// One sample of an update batch, as observed at the step's clock.
struct StreamSample {
    std::size_t index = 0;
    FeatureVector x;
    TrajectoryView trajectory;
    bool revealed = false;
    /// New click, or its trajectory gained a window this step.
    bool advanced = false;
    /// Revealed during this step.
    bool newly_revealed = false;
    /// Label known at the clock: the revealed label, or 0 while unrevealed.
    int label = 0;
    /// Present only for backbones that declare reads_ground_truth().
    std::optional<int> ground_truth;
};

class Backbone {
public:
    virtual ~Backbone() = default;

    virtual std::string name() const = 0;
    virtual bool reads_ground_truth() const { return false; }
    /// P(y = 1) for each click given the trajectory observed so far.
    virtual std::vector<double> predict(std::span<const FeatureVector> xs, std::span<const TrajectoryView> views) = 0;
    /// One optimizer pass over the batch, in order; one breakdown per mini-batch.
    virtual std::vector<LossBreakdown> update(std::span<const StreamSample> batch) = 0;
};

struct StreamConfig {
    Seconds delta = 3600;
    /// Initial clock; defaults to one second before the first click. Clicks
    /// at or before it form the observable history: they are never scored
    /// but are trained on as their feedback matures.
    std::optional<Seconds> start;
    /// Replay stops once the clock reaches this; defaults to the last click.
    std::optional<Seconds> end;
    /// Retrain on every clicked sample each step instead of the changed ones.
    bool full_prefix = false;
    /// Revisit revealed samples at their remaining window crossings.
    bool revisit_revealed = true;
    bool shuffle = true;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument when delta <= 0.
    void validate() const;
};

struct StepRecord {
    std::int64_t step = 0;
    Seconds tau = 0;  // clock after advancing, at which the batch was built
    std::size_t predicted = 0;
    std::size_t batch_size = 0;
    std::vector<LossBreakdown> losses;
};

/// Predict-then-update replay of a stream.
class StreamEngine {
public:
    enum class Status : std::uint8_t { kUnclicked, kPending, kArchived };

    /// Throws std::invalid_argument for an unsorted log or a behavior-count
    /// mismatch.
    StreamEngine(StreamSource& source, Backbone& model, HorizonConfig horizon, StreamConfig cfg);

    bool finished() const;
    /// Predicts (tau, tau + delta], advances the clock, ingests feedback,
    /// updates on the assembled batch and archives revealed samples.
    /// Throws std::out_of_range once finished.
    const StepRecord& step();

    Seconds tau() const { return tau_; }
    const std::vector<std::size_t>& pending() const { return pending_; }
    std::size_t archived() const { return archived_; }
    Status status(std::size_t i) const { return status_.at(i); }
    /// Sample indices of the most recent update batch, before shuffling.
    const std::vector<std::size_t>& last_batch() const { return last_batch_; }
    /// Samples of the most recent update batch, in the same order.
    const std::vector<StreamSample>& last_samples() const { return last_samples_; }
    /// Feedback observed so far for a clicked sample.
    const ClickEvent& observed(std::size_t i) const { return observed_.at(i); }
    const std::vector<MetricAccumulator>& intervals() const { return intervals_; }

    MetricReport report(const std::string& method) const;

private:
    void ingest(Seconds prev);
    void assemble(Seconds prev, std::size_t first_new);
    StreamSample sample_at(std::size_t i, bool advanced, bool newly_revealed);
    void archive();

    StreamSource& source_;
    Backbone& model_;
    HorizonConfig horizon_;
    StreamConfig cfg_;
    Seconds tau_ = 0;
    Seconds end_ = 0;
    std::int64_t steps_ = 0;
    std::size_t predict_cursor_ = 0;
    std::size_t click_cursor_ = 0;
    std::vector<Status> status_;
    std::vector<ClickEvent> observed_;
    std::vector<std::size_t> pending_;
    std::vector<std::size_t> clicked_;
    std::size_t window_cursor_ = 0;  // first clicked_ entry that can still gain a window
    std::size_t archived_ = 0;
    std::vector<std::size_t> last_batch_;
    std::vector<StreamSample> last_samples_;
    std::vector<MetricAccumulator> intervals_;
    StepRecord last_;
    std::mt19937_64 rng_;
};

struct RunResult {
    MetricReport report;
    std::vector<StepRecord> steps;
};

/// Replays the whole stream. `on_step` sees each step as it completes.
RunResult run_simulation(StreamSource& source, Backbone& model, const HorizonConfig& horizon, const StreamConfig& cfg,
                         const std::function<void(const StepRecord&)>& on_step = {});

inline constexpr const char* kTrainingLogHeader =
    "step,tau,minibatch,l_trj,l_sup,l_con,total,revealed,unrevealed,visible_windows";

/// One row per optimizer step.
void write_training_log(std::ostream& out, std::span<const StepRecord> steps);

}  // namespace trace
