#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trace/datagen.hpp"
#include "trace/event_model.hpp"

namespace trace {

/// Field roles of a click log file.
///
/// Each record holds: sample_id, click_ts, conv_ts, one timestamp per
/// behavior, the numeric features, then the hashed categorical features.
/// Empty timestamp fields mean "absent".
struct LogSchema {
    FeatureSchema features;
    std::vector<std::string> behaviors;
    std::optional<int> purchase;
    char delimiter = ',';

    std::size_t field_count() const;
    bool operator==(const LogSchema&) const = default;
};

LogSchema schema_for(const GeneratorSpec& spec);

/// INI file with a [schema] section.
void save_schema(const std::filesystem::path& path, const LogSchema& schema);
LogSchema load_schema(const std::filesystem::path& path);

void write_log(std::ostream& out, std::span<const ClickEvent> log, const LogSchema& schema);
void write_log(const std::filesystem::path& path, std::span<const ClickEvent> log, const LogSchema& schema);

struct IngestDiagnostic {
    std::size_t line = 0;
    std::string message;
};

struct IngestResult {
    std::vector<ClickEvent> log;  // valid records sorted by (click_ts, sample_id)
    std::vector<IngestDiagnostic> rejected;
    std::vector<std::string> warnings;
};

/// Parses and validates every record; malformed lines are reported and
/// skipped. Blank lines and lines starting with '#' are ignored.
IngestResult ingest(std::istream& in, const LogSchema& schema);
/// Throws std::runtime_error if the file cannot be opened.
IngestResult ingest(const std::filesystem::path& path, const LogSchema& schema);

inline constexpr const char* kTruthHeader = "sample_id,p_star,y,delay";

void write_truth(std::ostream& out, std::span<const TruthRecord> truth);
void write_truth(const std::filesystem::path& path, std::span<const TruthRecord> truth);
/// Throws std::runtime_error with the line number on malformed input.
std::vector<TruthRecord> read_truth(std::istream& in);
std::vector<TruthRecord> read_truth(const std::filesystem::path& path);

}  // namespace trace
