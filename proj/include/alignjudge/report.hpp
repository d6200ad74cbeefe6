#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alignjudge/harness.hpp"

namespace alignjudge {

nlohmann::json record_to_json(const EvaluationRecord& record);
// Inverse of record_to_json; throws std::runtime_error on schema errors.
EvaluationRecord record_from_json(const nlohmann::json& doc);

nlohmann::json failure_to_json(const FailedTask& failure);
nlohmann::json report_to_json(const MetricsReport& report);

// One JSON record per line.
void write_records(std::ostream& out, std::span<const EvaluationRecord> records);
std::vector<EvaluationRecord> read_records(std::istream& in);
std::vector<EvaluationRecord> load_records(const std::filesystem::path& path);

// Human-readable table. Undefined percentages print as "n/a".
std::string format_report(const MetricsReport& report);

// Writes records.jsonl, failures.jsonl, summary.json and report.txt into
// `dir`, creating it if needed.
void write_report_directory(const std::filesystem::path& dir,
                            std::span<const EvaluationRecord> records,
                            std::span<const FailedTask> failures,
                            const MetricsReport& report);

}  // namespace alignjudge
