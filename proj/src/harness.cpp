#include "alignjudge/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <stdexcept>
#include <thread>
#include <utility>
#include <variant>

namespace alignjudge {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

OrderingResult judge_once(Judge& judge, const PromptBundle& bundle,
                          const PipelineOptions& options) {
  const auto start = Clock::now();
  RawJudgment raw = judge.evaluate(bundle);
  OrderingResult r;
  r.ordering = bundle.ordering;
  r.latency_seconds = raw.latency_seconds > 0 ? raw.latency_seconds
                                              : seconds_since(start);
  r.input_tokens = raw.input_tokens;
  r.output_tokens = raw.output_tokens;
  r.from_cache = raw.from_cache;
  if (options.pricing) r.cost = cost_of(raw, *options.pricing);
  const ExtractionOutcome out = extract(bundle.form, raw.text, options.likert);
  if (const auto* v = std::get_if<SlotVerdict>(&out)) {
    r.slot_verdict = *v;
    r.verdict = normalize(*v, bundle.ordering);
  } else {
    r.failure = std::get<ExtractionFailure>(out);
  }
  r.raw_text = std::move(raw.text);
  return r;
}

void settle(StageResult& stage) {
  if (!stage.forward.verdict || !stage.reversed.verdict) {
    stage.outcome = Outcome::kUnparsable;
    return;
  }
  const ConsistencyCheck c =
      check_consistency(*stage.forward.verdict, *stage.reversed.verdict);
  stage.outcome = c.consistent ? Outcome::kConsistent : Outcome::kInconsistent;
  stage.verdict = c.verdict();
}

StageResult run_split_stage(Stage kind, const SplitPlan& plan,
                            const EvaluationTask& task, const AnswerText& first,
                            const AnswerText& second, Judge& judge,
                            const PipelineOptions& options,
                            const TemplateSet& templates) {
  StageResult stage;
  stage.stage = kind;
  stage.k = plan.k;
  stage.cuts_first = plan.cuts_first;
  stage.cuts_second = plan.cuts_second;
  stage.similarity_score = plan.score;
  const auto segs_first = split_at(first, plan.cuts_first);
  const auto segs_second = split_at(second, plan.cuts_second);
  stage.forward = judge_once(
      judge,
      render_split(task.form, task.question.text, segs_first, segs_second,
                   SlotOrdering::kForward, templates),
      options);
  stage.reversed = judge_once(
      judge,
      render_split(task.form, task.question.text, segs_second, segs_first,
                   SlotOrdering::kReversed, templates),
      options);
  settle(stage);
  return stage;
}

void add_to(MetricsGroup& g, const EvaluationRecord& r) {
  ++g.records;
  const bool origin_ok = r.original().outcome == Outcome::kConsistent;
  const bool final_ok = r.final_outcome == Outcome::kConsistent;
  ++g.origin_consistency.denominator;
  ++g.portia_consistency.denominator;
  if (origin_ok) ++g.origin_consistency.numerator;
  if (final_ok) ++g.portia_consistency.numerator;
  if (!origin_ok) {
    ++g.fixed_coverage.denominator;
    if (r.fixed) ++g.fixed_coverage.numerator;
  }
  if (r.original().outcome == Outcome::kUnparsable) ++g.unparsable_original;
  if (r.final_outcome == Outcome::kUnparsable) ++g.unparsable_final;
}

}  // namespace

std::string make_task_id(std::string_view question_id, std::string_view model_a,
                         std::string_view model_b, ComparisonForm form) {
  std::string id;
  id.append(question_id).append("|").append(model_a).append("|");
  id.append(model_b).append("|").append(to_string(form));
  return id;
}

void validate_task(const EvaluationTask& task) {
  if (task.k < 1) throw std::invalid_argument(task.task_id + ": k must be >= 1");
  if (task.answer_a.empty() || task.answer_b.empty()) {
    throw std::invalid_argument(task.task_id + ": empty answer");
  }
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kOriginal:
      return "original";
    case Stage::kLengthAligned:
      return "length_aligned";
    case Stage::kSemanticAligned:
      return "semantic_aligned";
  }
  return "unknown";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kConsistent:
      return "consistent";
    case Outcome::kInconsistent:
      return "inconsistent";
    case Outcome::kUnparsable:
      return "unparsable";
  }
  return "unknown";
}

std::optional<Stage> parse_stage(std::string_view s) {
  for (Stage v : {Stage::kOriginal, Stage::kLengthAligned, Stage::kSemanticAligned}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<Outcome> parse_outcome(std::string_view s) {
  for (Outcome v : {Outcome::kConsistent, Outcome::kInconsistent, Outcome::kUnparsable}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

EvaluationRecord run_pair(const EvaluationTask& task, Judge& judge,
                          const SimilarityMetric& similarity,
                          const PipelineOptions& options) {
  validate_task(task);
  const auto start = Clock::now();
  const TemplateSet& templates =
      options.templates ? *options.templates : TemplateSet::builtin();

  EvaluationRecord rec;
  rec.task_id = task.task_id;
  rec.question_id = task.question.id;
  rec.category = task.question.category;
  rec.model_a = task.model_a;
  rec.model_b = task.model_b;
  rec.form = task.form;
  rec.k_requested = task.k;
  rec.judge_id = task.judge_id.empty() ? judge.id() : task.judge_id;

  {
    StageResult s0;
    s0.stage = Stage::kOriginal;
    s0.k = 1;
    s0.forward = judge_once(
        judge,
        render_unsplit(task.form, task.question.text, task.answer_a,
                       task.answer_b, SlotOrdering::kForward, templates),
        options);
    s0.reversed = judge_once(
        judge,
        render_unsplit(task.form, task.question.text, task.answer_b,
                       task.answer_a, SlotOrdering::kReversed, templates),
        options);
    settle(s0);
    rec.stages.push_back(std::move(s0));
  }

  if (rec.stages.back().outcome != Outcome::kConsistent && task.k > 1) {
    const AnswerText first(task.answer_a);
    const AnswerText second(task.answer_b);
    const auto b1 = detect_boundaries(first);
    const auto b2 = detect_boundaries(second);
    if (effective_k(b1.size(), b2.size(), task.k) > 1) {
      const SplitPlan length = length_alignment(first, b1, second, b2, task.k);
      rec.stages.push_back(run_split_stage(Stage::kLengthAligned, length, task,
                                           first, second, judge, options,
                                           templates));
      if (rec.stages.back().outcome != Outcome::kConsistent) {
        const SplitPlan semantic = best_semantic_alignment(
            first, b1, second, b2, task.k, similarity, options.alignment);
        rec.stages.push_back(run_split_stage(Stage::kSemanticAligned, semantic,
                                             task, first, second, judge,
                                             options, templates));
      }
    }
  }

  const StageResult& last = rec.stages.back();
  rec.final_outcome = last.outcome;
  rec.final_verdict = last.verdict;
  rec.fixed = rec.original().outcome != Outcome::kConsistent &&
              rec.final_outcome == Outcome::kConsistent;

  bool cost_known = options.pricing.has_value();
  double cost = 0.0;
  for (const auto& s : rec.stages) {
    for (const OrderingResult* o : {&s.forward, &s.reversed}) {
      rec.tokens_total += o->input_tokens + o->output_tokens;
      if (o->cost) {
        cost += *o->cost;
      } else {
        cost_known = false;
      }
    }
  }
  if (cost_known) rec.cost_total = cost;
  rec.wall_time_seconds = seconds_since(start);
  return rec;
}

MetricsReport compute_metrics(
    std::span<const EvaluationRecord> records,
    std::optional<std::span<const EvaluationRecord>> reference) {
  MetricsReport m;
  bool cost_known = !records.empty();
  double cost = 0.0;
  for (const auto& r : records) {
    if (r.stages.empty()) {
      throw std::invalid_argument(r.task_id + ": record without stages");
    }
    add_to(m.overall, r);
    add_to(m.by_form[std::string(to_string(r.form))], r);
    add_to(m.by_category[r.category.empty() ? "(none)" : r.category], r);
    add_to(m.by_model_pair[r.model_a + " vs " + r.model_b], r);
    m.judge_calls += r.judge_calls();
    m.tokens_total += r.tokens_total;
    m.time_total_seconds += r.wall_time_seconds;
    if (r.cost_total) {
      cost += *r.cost_total;
    } else {
      cost_known = false;
    }
  }
  if (cost_known) m.cost_total = cost;

  if (reference) {
    std::map<std::string, const EvaluationRecord*> ref_by_id;
    for (const auto& r : *reference) {
      if (!r.stages.empty()) ref_by_id.emplace(r.task_id, &r);
    }
    Ratio agree;
    Ratio agree_origin;
    for (const auto& r : records) {
      const auto it = ref_by_id.find(r.task_id);
      if (it == ref_by_id.end()) continue;
      const EvaluationRecord& ref = *it->second;
      if (ref.final_outcome != Outcome::kConsistent) continue;
      ++agree.denominator;
      ++agree_origin.denominator;
      if (r.final_outcome == Outcome::kConsistent && r.final_verdict == ref.final_verdict) {
        ++agree.numerator;
      }
      const StageResult& own0 = r.original();
      if (own0.outcome == Outcome::kConsistent && own0.verdict == ref.final_verdict) {
        ++agree_origin.numerator;
      }
    }
    m.agreement = agree;
    m.agreement_origin = agree_origin;
  }
  return m;
}

DatasetResult run_dataset(std::span<const EvaluationTask> tasks, Judge& judge,
                          const SimilarityMetric& similarity,
                          const DatasetRunOptions& options) {
  using Result = std::variant<std::monostate, EvaluationRecord, FailedTask>;
  std::vector<Result> slots(tasks.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const EvaluationTask& task = tasks[i];
      try {
        slots[i] = run_pair(task, judge, similarity, options.pipeline);
      } catch (const JudgeError& e) {
        slots[i] = FailedTask{task.task_id, std::string(to_string(e.kind())),
                              e.what(), e.retriable()};
      } catch (const std::exception& e) {
        slots[i] = FailedTask{task.task_id, "invalid_task", e.what(), false};
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(options.parallelism, 1)), 1,
      std::max<std::size_t>(tasks.size(), 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  DatasetResult out;
  for (auto& s : slots) {
    if (auto* r = std::get_if<EvaluationRecord>(&s)) {
      out.records.push_back(std::move(*r));
    } else if (auto* f = std::get_if<FailedTask>(&s)) {
      out.failures.push_back(std::move(*f));
    }
  }
  out.report = compute_metrics(out.records);
  out.report.failed_tasks = out.failures.size();
  return out;
}

}  // namespace alignjudge
