#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "alignjudge/harness.hpp"

namespace alignjudge {

// One line of a dataset file:
//   {"question_id": ..., "category": ..., "question": ...,
//    "answers": {"model": "text", ...}}
struct DatasetEntry {
  std::string question_id;
  std::string category;
  std::string question;
  std::map<std::string, std::string> answers;
};

// Throws std::runtime_error naming the offending line. Blank lines are
// skipped; duplicate question ids are rejected.
std::vector<DatasetEntry> read_dataset(std::istream& in);
std::vector<DatasetEntry> load_dataset(const std::filesystem::path& path);

// {"pairs": [["model_a", "model_b"], ...], "forms": ["relation", ...]}
// Pairs may also be objects {"model_a": ..., "model_b": ...}. Forms default
// to all three.
struct PairingManifest {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<ComparisonForm> forms;
};

PairingManifest parse_pairing_manifest(const nlohmann::json& doc);
PairingManifest load_pairing_manifest(const std::filesystem::path& path);

struct TaskPlan {
  std::vector<EvaluationTask> tasks;
  std::vector<FailedTask> skipped;  // missing or empty answers
};

// Cross product questions x pairs x forms, in that nesting order.
TaskPlan build_tasks(const std::vector<DatasetEntry>& dataset,
                     const PairingManifest& manifest, int k,
                     const std::string& judge_id);

}  // namespace alignjudge
