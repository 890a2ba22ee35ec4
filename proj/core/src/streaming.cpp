#include "trace/streaming.hpp"

#include <algorithm>
#include <iterator>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace trace {

LogStreamSource::LogStreamSource(std::vector<ClickEvent> log, Seconds d_max) {
    behaviors_ = log.empty() ? 0 : static_cast<int>(log.front().behavior_ts.size());
    clicks_.reserve(log.size());
    labels_.reserve(log.size());
    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto& e = log[i];
        if (static_cast<int>(e.behavior_ts.size()) != behaviors_) {
            throw std::invalid_argument("LogStreamSource: inconsistent behavior count");
        }
        labels_.push_back(ground_truth_label(e, d_max));
        if (e.conv_ts) feedback_.push_back({i, -1, *e.conv_ts});
        for (int k = 0; k < behaviors_; ++k) {
            if (const auto& b = e.behavior_ts[static_cast<std::size_t>(k)]) feedback_.push_back({i, k, *b});
        }
        ClickEvent c;
        c.sample_id = e.sample_id;
        c.click_ts = e.click_ts;
        c.features = e.features;
        c.behavior_ts.assign(e.behavior_ts.size(), std::nullopt);
        clicks_.push_back(std::move(c));
    }
    std::stable_sort(feedback_.begin(), feedback_.end(),
                     [](const FeedbackArrival& a, const FeedbackArrival& b) { return a.ts < b.ts; });
}

std::vector<FeedbackArrival> LogStreamSource::arrivals(Seconds lo, Seconds hi) {
    const auto by_ts = [](const FeedbackArrival& a, Seconds t) { return a.ts <= t; };
    const auto first = std::partition_point(feedback_.begin(), feedback_.end(), [&](const auto& a) { return by_ts(a, lo); });
    const auto last = std::partition_point(first, feedback_.end(), [&](const auto& a) { return by_ts(a, hi); });
    return {first, last};
}

int LogStreamSource::ground_truth(std::size_t i, Reader) { return labels_.at(i); }

void StreamConfig::validate() const {
    if (delta <= 0) throw std::invalid_argument("StreamConfig: delta must be positive");
    if (start && end && *end < *start) throw std::invalid_argument("StreamConfig: end precedes start");
}

StreamEngine::StreamEngine(StreamSource& source, Backbone& model, HorizonConfig horizon, StreamConfig cfg)
    : source_(source), model_(model), horizon_(std::move(horizon)), cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
    horizon_.validate();
    const auto n = source_.size();
    if (n > 0 && source_.behaviors() != horizon_.behaviors()) {
        throw std::invalid_argument("StreamEngine: log has " + std::to_string(source_.behaviors()) +
                                    " behaviors, horizon config has " + std::to_string(horizon_.behaviors()));
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (source_.click(i).click_ts < source_.click(i - 1).click_ts) {
            throw std::invalid_argument("StreamEngine: log is not sorted by click time");
        }
    }
    const Seconds first = n ? source_.click(0).click_ts : 0;
    const Seconds last = n ? source_.click(n - 1).click_ts : 0;
    status_.assign(n, Status::kUnclicked);
    observed_.resize(n);
    tau_ = cfg_.start.value_or(first - 1);
    end_ = cfg_.end.value_or(std::max(last, tau_));
    source_.on_clock(tau_);
    // Clicks up to the start clock are history: observable, never scored.
    ingest(std::min(first, tau_) - 1);
    while (predict_cursor_ < n && source_.click(predict_cursor_).click_ts <= tau_) ++predict_cursor_;
    archive();
}

bool StreamEngine::finished() const { return tau_ >= end_; }

void StreamEngine::ingest(Seconds prev) {
    const auto n = source_.size();
    while (click_cursor_ < n && source_.click(click_cursor_).click_ts <= tau_) {
        const auto i = click_cursor_++;
        observed_[i] = source_.click(i);
        status_[i] = Status::kPending;
        pending_.push_back(i);
        clicked_.push_back(i);
    }
    for (const auto& a : source_.arrivals(prev, tau_)) {
        if (status_.at(a.index) == Status::kUnclicked) {
            throw std::logic_error("StreamEngine: feedback for a sample that has not been clicked");
        }
        auto& e = observed_[a.index];
        if (a.behavior < 0) e.conv_ts = a.ts;
        else e.behavior_ts.at(static_cast<std::size_t>(a.behavior)) = a.ts;
    }
}

void StreamEngine::assemble(Seconds prev, std::size_t first_new) {
    const Seconds d_max = horizon_.d_max();
    // Candidates: every pending sample plus every clicked sample young
    // enough to still gain a window, revealed or not. Revisiting revealed
    // samples at their window crossings keeps the number of appearances of
    // a sample independent of its label.
    std::vector<std::size_t> candidates;
    if (cfg_.revisit_revealed) {
        std::set_union(pending_.begin(), pending_.end(), clicked_.begin() + static_cast<std::ptrdiff_t>(window_cursor_),
                       clicked_.end(), std::back_inserter(candidates));
    } else {
        candidates = pending_;
    }
    const std::size_t first_new_index = first_new < clicked_.size() ? clicked_[first_new] : status_.size();
    last_batch_.clear();
    last_samples_.clear();
    for (auto i : cfg_.full_prefix ? std::vector<std::size_t>{} : candidates) {
        const auto& e = observed_[i];
        const bool fresh = i >= first_new_index;
        const bool advanced = fresh || horizon_.visible_windows(tau_ - e.click_ts) >
                                           horizon_.visible_windows(prev - e.click_ts);
        const bool newly = status_[i] == Status::kPending && is_revealed(e, tau_, d_max);
        if (advanced || newly) {
            last_batch_.push_back(i);
            last_samples_.push_back(sample_at(i, advanced, newly));
        }
    }
    if (cfg_.full_prefix) {
        // The whole observable prefix, every loss over every sample.
        last_batch_ = clicked_;
        last_samples_.clear();
        for (auto i : clicked_) {
            const bool revealed = is_revealed(observed_[i], tau_, d_max);
            last_samples_.push_back(sample_at(i, true, revealed));
        }
    }
    while (window_cursor_ < clicked_.size() && tau_ - observed_[clicked_[window_cursor_]].click_ts >= d_max) {
        ++window_cursor_;
    }
}

StreamSample StreamEngine::sample_at(std::size_t i, bool advanced, bool newly_revealed) {
    const auto& e = observed_[i];
    StreamSample s;
    s.index = i;
    s.x = e.features;
    s.trajectory = build_trajectory(e, tau_, horizon_);
    s.revealed = is_revealed(e, tau_, horizon_.d_max());
    s.advanced = advanced;
    s.newly_revealed = newly_revealed;
    s.label = s.revealed ? revealed_label(e, tau_, horizon_.d_max()) : 0;
    if (model_.reads_ground_truth()) s.ground_truth = source_.ground_truth(i, Reader::kBackbone);
    return s;
}

void StreamEngine::archive() {
    const Seconds d_max = horizon_.d_max();
    std::erase_if(pending_, [&](std::size_t i) {
        if (!is_revealed(observed_[i], tau_, d_max)) return false;
        status_[i] = Status::kArchived;
        ++archived_;
        return true;
    });
}

const StepRecord& StreamEngine::step() {
    if (finished()) throw std::out_of_range("StreamEngine: clock is beyond the stream range");
    const auto n = source_.size();
    StepRecord rec;
    rec.step = steps_++;

    // Predict the next interval with the current model.
    MetricAccumulator acc;
    acc.interval_start = tau_;
    const Seconds hi = tau_ + cfg_.delta;
    std::vector<std::size_t> targets;
    while (predict_cursor_ < n && source_.click(predict_cursor_).click_ts <= hi) targets.push_back(predict_cursor_++);
    if (!targets.empty()) {
        std::vector<FeatureVector> xs;
        std::vector<TrajectoryView> views;
        for (auto i : targets) {
            xs.push_back(source_.click(i).features);
            views.push_back(TrajectoryView::blank(horizon_.windows(), horizon_.behaviors()));
        }
        const auto scores = model_.predict(xs, views);
        for (std::size_t j = 0; j < targets.size(); ++j) {
            acc.add(scores[j], source_.ground_truth(targets[j], Reader::kEvaluator));
        }
        intervals_.push_back(std::move(acc));
    }
    rec.predicted = targets.size();

    const Seconds prev = tau_;
    tau_ = hi;
    rec.tau = tau_;
    source_.on_clock(tau_);
    const std::size_t first_new = clicked_.size();
    ingest(prev);

    assemble(prev, first_new);
    std::vector<StreamSample> batch = last_samples_;
    if (cfg_.shuffle) std::shuffle(batch.begin(), batch.end(), rng_);
    if (!batch.empty()) rec.losses = model_.update(batch);
    rec.batch_size = batch.size();

    archive();
    last_ = std::move(rec);
    return last_;
}

MetricReport StreamEngine::report(const std::string& method) const {
    MetricReport r;
    r.method = method;
    for (const auto& acc : intervals_) r.intervals.push_back(evaluate_interval(acc));
    r.aggregate = aggregate(intervals_);
    return r;
}

RunResult run_simulation(StreamSource& source, Backbone& model, const HorizonConfig& horizon, const StreamConfig& cfg,
                         const std::function<void(const StepRecord&)>& on_step) {
    StreamEngine engine(source, model, horizon, cfg);
    RunResult result;
    while (!engine.finished()) {
        const auto& rec = engine.step();
        if (on_step) on_step(rec);
        result.steps.push_back(rec);
    }
    result.report = engine.report(model.name());
    return result;
}

void write_training_log(std::ostream& out, std::span<const StepRecord> steps) {
    out << kTrainingLogHeader << '\n';
    char buf[128];
    for (const auto& s : steps) {
        for (std::size_t m = 0; m < s.losses.size(); ++m) {
            const auto& l = s.losses[m];
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", l.l_trj, l.l_sup, l.l_con, l.total);
            out << s.step << ',' << s.tau << ',' << m << ',' << buf << ',' << l.revealed << ',' << l.unrevealed << ','
                << l.visible_windows << '\n';
        }
    }
}

}  // namespace trace
