#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alignjudge/alignment.hpp"
#include "alignjudge/judges.hpp"
#include "alignjudge/prompting.hpp"
#include "alignjudge/segmentation.hpp"
#include "alignjudge/verdict.hpp"

namespace alignjudge {

struct Question {
  std::string id;
  std::string category;
  std::string text;
};

struct EvaluationTask {
  std::string task_id;
  Question question;
  std::string model_a;
  std::string answer_a;
  std::string model_b;
  std::string answer_b;
  ComparisonForm form = ComparisonForm::kRelation;
  int k = kDefaultSegmentCount;
  std::string judge_id;
};

// "<question id>|<model a>|<model b>|<form>"; judge-independent so records
// from different judges line up for agreement.
std::string make_task_id(std::string_view question_id, std::string_view model_a,
                         std::string_view model_b, ComparisonForm form);

// Throws std::invalid_argument for empty answers or k < 1.
void validate_task(const EvaluationTask& task);

enum class Stage { kOriginal, kLengthAligned, kSemanticAligned };
enum class Outcome { kConsistent, kInconsistent, kUnparsable };

std::string_view to_string(Stage s);
std::string_view to_string(Outcome o);
std::optional<Stage> parse_stage(std::string_view s);
std::optional<Outcome> parse_outcome(std::string_view s);

struct OrderingResult {
  SlotOrdering ordering = SlotOrdering::kForward;
  std::string raw_text;
  std::optional<SlotVerdict> slot_verdict;
  std::optional<Verdict> verdict;  // answer space
  std::optional<ExtractionFailure> failure;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::optional<double> cost;
  double latency_seconds = 0.0;
  bool from_cache = false;
};

struct StageResult {
  Stage stage = Stage::kOriginal;
  int k = 1;
  std::vector<SplitPosition> cuts_first;
  std::vector<SplitPosition> cuts_second;
  std::optional<double> similarity_score;  // semantic stage only
  OrderingResult forward;
  OrderingResult reversed;
  Outcome outcome = Outcome::kInconsistent;
  std::optional<Verdict> verdict;  // set when consistent
};

// Full per-pair trace. Stages appear in order and a stage exists only when
// the one before it was not consistent.
struct EvaluationRecord {
  std::string task_id;
  std::string question_id;
  std::string category;
  std::string model_a;
  std::string model_b;
  ComparisonForm form = ComparisonForm::kRelation;
  int k_requested = kDefaultSegmentCount;
  std::string judge_id;

  std::vector<StageResult> stages;
  Outcome final_outcome = Outcome::kInconsistent;
  std::optional<Verdict> final_verdict;
  bool fixed = false;  // stage 0 not consistent, final consistent

  std::int64_t tokens_total = 0;
  std::optional<double> cost_total;
  double wall_time_seconds = 0.0;

  const StageResult& original() const { return stages.front(); }
  std::size_t judge_calls() const { return 2 * stages.size(); }
};

struct PipelineOptions {
  LikertMapping likert = LikertMapping::standard();
  AlignmentOptions alignment;
  // Prices judge calls; costs stay unknown without it.
  std::optional<JudgeConfig> pricing;
  const TemplateSet* templates = nullptr;  // builtin when null
};

// Original -> length-aligned -> semantic-aligned, stopping at the first
// consistent stage. Stages 1-2 are skipped when neither answer can be split.
// JudgeError from the judge propagates; extraction failures mark the ordering
// unparsable and the stage as not consistent.
EvaluationRecord run_pair(const EvaluationTask& task, Judge& judge,
                          const SimilarityMetric& similarity,
                          const PipelineOptions& options = {});

struct FailedTask {
  std::string task_id;
  std::string kind;
  std::string message;
  bool retriable = false;
};

// Percentage with its counts. Undefined (nullopt) when the denominator is 0.
struct Ratio {
  std::size_t numerator = 0;
  std::size_t denominator = 0;
  std::optional<double> percent() const {
    if (denominator == 0) return std::nullopt;
    return 100.0 * static_cast<double>(numerator) /
           static_cast<double>(denominator);
  }
};

struct MetricsGroup {
  std::size_t records = 0;
  Ratio origin_consistency;
  Ratio portia_consistency;
  Ratio fixed_coverage;  // over stage-0 non-consistent records
  std::size_t unparsable_original = 0;
  std::size_t unparsable_final = 0;
};

struct MetricsReport {
  MetricsGroup overall;
  // Against a reference judge, over matched records where the reference's
  // final verdict is consistent: subject final (agreement) or subject stage 0
  // (agreement_origin) consistent with the same verdict.
  std::optional<Ratio> agreement;
  std::optional<Ratio> agreement_origin;
  std::size_t failed_tasks = 0;
  std::size_t judge_calls = 0;
  std::int64_t tokens_total = 0;
  std::optional<double> cost_total;
  double time_total_seconds = 0.0;
  std::map<std::string, MetricsGroup> by_form;
  std::map<std::string, MetricsGroup> by_category;
  std::map<std::string, MetricsGroup> by_model_pair;
};

MetricsReport compute_metrics(
    std::span<const EvaluationRecord> records,
    std::optional<std::span<const EvaluationRecord>> reference = std::nullopt);

struct DatasetRunOptions {
  int parallelism = 1;
  PipelineOptions pipeline;
};

struct DatasetResult {
  std::vector<EvaluationRecord> records;  // in task order
  std::vector<FailedTask> failures;
  MetricsReport report;
};

// Runs tasks on up to `parallelism` workers. Records keep task order, so the
// result is deterministic for deterministic judges. Failed tasks are listed
// separately and excluded from the metrics.
DatasetResult run_dataset(std::span<const EvaluationTask> tasks, Judge& judge,
                          const SimilarityMetric& similarity,
                          const DatasetRunOptions& options = {});

}  // namespace alignjudge
