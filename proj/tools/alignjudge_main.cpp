// alignjudge: split / render / eval / metrics.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "alignjudge/alignment.hpp"
#include "alignjudge/dataset.hpp"
#include "alignjudge/harness.hpp"
#include "alignjudge/judges.hpp"
#include "alignjudge/mock_judges.hpp"
#include "alignjudge/prompting.hpp"
#include "alignjudge/report.hpp"
#include "alignjudge/segmentation.hpp"

namespace aj = alignjudge;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

aj::LikertMapping likert_mapping(const std::string& name) {
  if (name == "standard") return aj::LikertMapping::standard();
  if (name == "inverted") return aj::LikertMapping::inverted();
  throw std::runtime_error("unknown likert mapping: " + name);
}

std::string escape_segment(std::string_view s) {
  return json(std::string(s)).dump();
}

void print_plan(const char* title, const aj::SplitPlan& plan,
                const aj::AnswerText& first, const aj::AnswerText& second) {
  std::cout << title << " (k=" << plan.k;
  if (plan.k != plan.requested_k) std::cout << ", requested " << plan.requested_k;
  if (plan.score) std::cout << ", score " << *plan.score;
  if (plan.visited_pairs) std::cout << ", visited " << plan.visited_pairs;
  if (plan.thinned) std::cout << ", thinned";
  std::cout << ")\n";
  const auto a = aj::split_at(first, plan.cuts_first);
  const auto b = aj::split_at(second, plan.cuts_second);
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::cout << "  part " << i + 1 << "\n    first:  " << escape_segment(a[i])
              << "\n    second: " << escape_segment(b[i]) << "\n";
  }
}

struct SplitArgs {
  std::string first, second;
  int k = aj::kDefaultSegmentCount;
};

int run_split(const SplitArgs& args) {
  const aj::AnswerText first(read_file(args.first));
  const aj::AnswerText second(read_file(args.second));
  const auto b1 = aj::detect_boundaries(first);
  const auto b2 = aj::detect_boundaries(second);
  for (const auto& [name, bs] : {std::pair{"first", &b1}, std::pair{"second", &b2}}) {
    std::cout << name << " boundaries (" << bs->size() << "):";
    for (const auto& b : *bs) std::cout << " " << b.offset;
    std::cout << "\n";
  }
  const int k = aj::effective_k(b1.size(), b2.size(), args.k);
  if (k == 1) {
    std::cout << "no split possible (effective k = 1)\n";
    return kExitOk;
  }
  print_plan("length alignment", aj::length_alignment(first, b1, second, b2, args.k),
             first, second);
  const aj::TokenOverlapSimilarity sim;
  print_plan("semantic alignment",
             aj::best_semantic_alignment(first, b1, second, b2, args.k, sim),
             first, second);
  return kExitOk;
}

struct RenderArgs {
  std::string form = "relation";
  std::string question;
  std::string question_file;
  std::string first, second;
  int k = 1;
  std::string strategy = "length";
  bool reversed = false;
  std::string templates;
};

int run_render(const RenderArgs& args) {
  const auto form = aj::parse_form(args.form);
  if (!form) throw std::runtime_error("unknown form: " + args.form);
  const std::string question =
      args.question_file.empty() ? args.question : read_file(args.question_file);
  const aj::TemplateSet templates = args.templates.empty()
                                        ? aj::TemplateSet::builtin()
                                        : aj::TemplateSet::load_directory(args.templates);
  const std::string a_text = read_file(args.first);
  const std::string b_text = read_file(args.second);
  const auto ordering = args.reversed ? aj::SlotOrdering::kReversed : aj::SlotOrdering::kForward;
  const std::string& slot_a = args.reversed ? b_text : a_text;
  const std::string& slot_b = args.reversed ? a_text : b_text;

  aj::PromptBundle bundle;
  int k_eff = 1;
  std::optional<aj::SplitPlan> plan;
  if (args.k > 1) {
    const aj::AnswerText first(a_text);
    const aj::AnswerText second(b_text);
    const auto b1 = aj::detect_boundaries(first);
    const auto b2 = aj::detect_boundaries(second);
    k_eff = aj::effective_k(b1.size(), b2.size(), args.k);
    if (k_eff > 1) {
      if (args.strategy == "semantic") {
        plan = aj::best_semantic_alignment(first, b1, second, b2, args.k,
                                           aj::TokenOverlapSimilarity{});
      } else if (args.strategy == "length") {
        plan = aj::length_alignment(first, b1, second, b2, args.k);
      } else {
        throw std::runtime_error("unknown strategy: " + args.strategy);
      }
      auto sa = aj::split_at(first, plan->cuts_first);
      auto sb = aj::split_at(second, plan->cuts_second);
      if (args.reversed) std::swap(sa, sb);
      bundle = aj::render_split(*form, question, sa, sb, ordering, templates);
    }
  }
  if (!plan) bundle = aj::render_unsplit(*form, question, slot_a, slot_b, ordering, templates);
  if (args.k > 1 && k_eff != args.k) {
    std::cerr << "note: effective k = " << k_eff << " (requested " << args.k << ")\n";
  }
  std::cout << bundle.text;
  return kExitOk;
}

struct EvalArgs {
  std::string dataset, pairs, form = "manifest", judge, cache, out;
  std::string likert = "standard";
  std::string templates;
  int k = aj::kDefaultSegmentCount;
  int parallelism = 0;
  std::uint64_t max_pairs = aj::AlignmentOptions{}.max_pairs;
};

std::shared_ptr<aj::Judge> make_judge(const aj::JudgeConfig& config,
                                      const std::vector<aj::DatasetEntry>& dataset) {
  if (config.kind == "mock") {
    aj::MockJudgeSpec spec = aj::parse_mock_spec(config.judge_id, config.mock);
    // "reference_model" names the dataset answers used as references.
    const std::string ref_model = config.mock.value("reference_model", std::string());
    if (!ref_model.empty()) {
      for (const auto& e : dataset) {
        const auto it = e.answers.find(ref_model);
        if (it != e.answers.end()) spec.references.emplace(e.question, it->second);
      }
    }
    return std::make_shared<aj::MockJudge>(std::move(spec));
  }
  return std::make_shared<aj::HttpJudge>(config);
}

int run_eval(const EvalArgs& args) {
  const aj::JudgeConfig config = aj::load_judge_config(args.judge);
  const auto dataset = aj::load_dataset(args.dataset);
  aj::PairingManifest manifest = aj::load_pairing_manifest(args.pairs);
  if (args.form == "all") {
    manifest.forms = {aj::ComparisonForm::kRelation, aj::ComparisonForm::kScore,
                      aj::ComparisonForm::kLikert};
  } else if (args.form != "manifest") {
    const auto form = aj::parse_form(args.form);
    if (!form) throw std::runtime_error("unknown form: " + args.form);
    manifest.forms = {*form};
  }
  if (args.k < 1) throw std::runtime_error("--k must be >= 1");

  aj::TaskPlan plan = aj::build_tasks(dataset, manifest, args.k, config.judge_id);

  std::shared_ptr<aj::Judge> judge = make_judge(config, dataset);
  std::shared_ptr<aj::CachingJudge> caching;
  if (!args.cache.empty()) {
    caching = std::make_shared<aj::CachingJudge>(
        judge, std::make_shared<aj::ResponseCache>(args.cache));
    judge = caching;
  }

  std::optional<aj::TemplateSet> templates;
  if (!args.templates.empty()) templates = aj::TemplateSet::load_directory(args.templates);

  aj::DatasetRunOptions options;
  options.parallelism = args.parallelism > 0 ? args.parallelism : config.parallelism;
  options.pipeline.likert = likert_mapping(args.likert);
  options.pipeline.alignment.max_pairs = args.max_pairs;
  options.pipeline.pricing = config;
  if (templates) options.pipeline.templates = &*templates;

  const aj::TokenOverlapSimilarity similarity;
  aj::DatasetResult result = aj::run_dataset(plan.tasks, *judge, similarity, options);
  result.failures.insert(result.failures.end(), plan.skipped.begin(), plan.skipped.end());
  result.report.failed_tasks = result.failures.size();

  if (!args.out.empty()) {
    aj::write_report_directory(args.out, result.records, result.failures, result.report);
  }
  std::cout << aj::format_report(result.report);
  if (caching) {
    std::cout << "cache                 " << caching->hits() << " hits, "
              << caching->misses() << " misses\n";
  }
  for (const auto& f : result.failures) {
    std::cerr << "failed " << f.task_id << " [" << f.kind
              << (f.retriable ? ", retriable" : "") << "]: " << f.message << "\n";
  }
  if (result.failures.empty()) return kExitOk;
  return result.records.empty() ? kExitFatal : kExitPartial;
}

struct MetricsArgs {
  std::string records, reference, out;
  bool as_json = false;
};

int run_metrics(const MetricsArgs& args) {
  const auto records = aj::load_records(args.records);
  std::optional<std::vector<aj::EvaluationRecord>> reference;
  if (!args.reference.empty()) reference = aj::load_records(args.reference);
  const aj::MetricsReport report =
      reference ? aj::compute_metrics(records, std::span<const aj::EvaluationRecord>(*reference))
                : aj::compute_metrics(records);
  if (!args.out.empty()) {
    std::ofstream f(args.out);
    if (!f) throw std::runtime_error("cannot write " + args.out);
    f << aj::report_to_json(report).dump(2) << "\n";
  }
  if (args.as_json) {
    std::cout << aj::report_to_json(report).dump(2) << "\n";
  } else {
    std::cout << aj::format_report(report);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Position-bias calibration for pairwise LLM judges"};
  app.require_subcommand(1);

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Show boundaries and split plans for one pair");
  split_cmd->add_option("--first", split.first, "First answer file")->required();
  split_cmd->add_option("--second", split.second, "Second answer file")->required();
  split_cmd->add_option("--k", split.k, "Segments per answer")->capture_default_str();

  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render", "Print a judge prompt");
  render_cmd->add_option("--form", render.form, "relation|score|likert")->capture_default_str();
  auto* q = render_cmd->add_option("--question", render.question, "Question text");
  render_cmd->add_option("--question-file", render.question_file, "Question file")->excludes(q);
  render_cmd->add_option("--first", render.first, "First answer file")->required();
  render_cmd->add_option("--second", render.second, "Second answer file")->required();
  render_cmd->add_option("--k", render.k, "Segments per answer (1: unsplit)")->capture_default_str();
  render_cmd->add_option("--strategy", render.strategy, "length|semantic")->capture_default_str();
  render_cmd->add_flag("--reversed", render.reversed, "Put the first answer in slot B");
  render_cmd->add_option("--templates", render.templates, "Template directory");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Run the pipeline over a dataset");
  eval_cmd->add_option("--dataset", eval.dataset, "Dataset JSONL")->required();
  eval_cmd->add_option("--pairs", eval.pairs, "Pairing manifest JSON")->required();
  eval_cmd->add_option("--form", eval.form, "relation|score|likert|all (default: manifest forms)")
      ->check(CLI::IsMember({"relation", "score", "likert", "all", "manifest"}));
  eval_cmd->add_option("--judge", eval.judge, "Judge config JSON")->required();
  eval_cmd->add_option("--k", eval.k, "Segments per answer")->capture_default_str();
  eval_cmd->add_option("--parallelism", eval.parallelism, "Worker count (default: judge config)");
  eval_cmd->add_option("--cache", eval.cache, "Response cache JSONL");
  eval_cmd->add_option("--out", eval.out, "Output directory");
  eval_cmd->add_option("--likert", eval.likert, "standard|inverted")
      ->check(CLI::IsMember({"standard", "inverted"}))
      ->capture_default_str();
  eval_cmd->add_option("--templates", eval.templates, "Template directory");
  eval_cmd->add_option("--max-pairs", eval.max_pairs, "Semantic search cap before thinning")
      ->capture_default_str();

  MetricsArgs metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "Recompute the report from records");
  metrics_cmd->add_option("records", metrics.records, "records.jsonl")->required();
  metrics_cmd->add_option("--reference", metrics.reference, "Reference judge records.jsonl");
  metrics_cmd->add_option("--out", metrics.out, "Write summary JSON here");
  metrics_cmd->add_flag("--json", metrics.as_json, "Print JSON instead of a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitFatal;
  }

  try {
    if (*split_cmd) return run_split(split);
    if (*render_cmd) return run_render(render);
    if (*eval_cmd) return run_eval(eval);
    if (*metrics_cmd) return run_metrics(metrics);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitFatal;
}
