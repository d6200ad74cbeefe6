#include "alignjudge/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace alignjudge {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> read_optional_number(const json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return doc.at(key).get<double>();
}

json cuts_to_json(const std::vector<SplitPosition>& cuts) {
  json arr = json::array();
  for (const auto& c : cuts) arr.push_back(c.offset);
  return arr;
}

// Boundary kinds are not serialized; reloaded cuts carry only offsets.
std::vector<SplitPosition> cuts_from_json(const json& arr) {
  std::vector<SplitPosition> out;
  for (const auto& v : arr) out.push_back({v.get<std::size_t>(), BoundaryKind::kSentenceEnd});
  return out;
}

json ordering_to_json(const OrderingResult& o) {
  json j;
  j["ordering"] = to_string(o.ordering);
  j["raw"] = o.raw_text;
  j["slot_verdict"] = o.slot_verdict ? json(to_string(*o.slot_verdict)) : json(nullptr);
  j["verdict"] = o.verdict ? json(to_string(*o.verdict)) : json(nullptr);
  j["failure"] = o.failure ? json(to_string(*o.failure)) : json(nullptr);
  j["input_tokens"] = o.input_tokens;
  j["output_tokens"] = o.output_tokens;
  j["cost"] = optional_number(o.cost);
  j["latency_seconds"] = o.latency_seconds;
  j["from_cache"] = o.from_cache;
  return j;
}

std::optional<SlotVerdict> parse_slot_verdict(std::string_view s) {
  for (SlotVerdict v : {SlotVerdict::kA, SlotVerdict::kB, SlotVerdict::kTie}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

template <typename T, typename Parse>
std::optional<T> read_enum(const json& doc, const char* key, Parse parse) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  const auto s = doc.at(key).get<std::string>();
  auto v = parse(s);
  if (!v) throw std::runtime_error(std::string("bad ") + key + ": " + s);
  return v;
}

OrderingResult ordering_from_json(const json& j) {
  OrderingResult o;
  o.ordering = j.at("ordering").get<std::string>() == "reversed"
                   ? SlotOrdering::kReversed
                   : SlotOrdering::kForward;
  o.raw_text = j.value("raw", std::string());
  o.slot_verdict = read_enum<SlotVerdict>(j, "slot_verdict", parse_slot_verdict);
  o.verdict = read_enum<Verdict>(j, "verdict", parse_verdict);
  o.failure = read_enum<ExtractionFailure>(j, "failure", parse_failure);
  o.input_tokens = j.value("input_tokens", std::int64_t{0});
  o.output_tokens = j.value("output_tokens", std::int64_t{0});
  o.cost = read_optional_number(j, "cost");
  o.latency_seconds = j.value("latency_seconds", 0.0);
  o.from_cache = j.value("from_cache", false);
  return o;
}

json ratio_to_json(const Ratio& r) {
  return {{"numerator", r.numerator},
          {"denominator", r.denominator},
          {"percent", optional_number(r.percent())}};
}

json group_to_json(const MetricsGroup& g) {
  return {{"records", g.records},
          {"origin_consistency", ratio_to_json(g.origin_consistency)},
          {"portia_consistency", ratio_to_json(g.portia_consistency)},
          {"fixed_coverage", ratio_to_json(g.fixed_coverage)},
          {"unparsable_original", g.unparsable_original},
          {"unparsable_final", g.unparsable_final}};
}

std::string pct(const Ratio& r) {
  const auto p = r.percent();
  if (!p) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", *p);
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

void table_rows(std::ostringstream& os, const std::string& title,
                const std::map<std::string, MetricsGroup>& groups) {
  os << "\n" << title << "\n";
  os << pad("", 2) << pad("group", 34) << pad("n", 7) << pad("origin", 10)
     << pad("final", 10) << "fixed\n";
  for (const auto& [name, g] : groups) {
    os << pad("", 2) << pad(name, 34) << pad(std::to_string(g.records), 7)
       << pad(pct(g.origin_consistency), 10) << pad(pct(g.portia_consistency), 10)
       << pct(g.fixed_coverage) << "\n";
  }
}

}  // namespace

json record_to_json(const EvaluationRecord& r) {
  json j;
  j["task_id"] = r.task_id;
  j["question_id"] = r.question_id;
  j["category"] = r.category;
  j["model_a"] = r.model_a;
  j["model_b"] = r.model_b;
  j["form"] = to_string(r.form);
  j["k_requested"] = r.k_requested;
  j["judge_id"] = r.judge_id;
  json stages = json::array();
  for (const auto& s : r.stages) {
    json js;
    js["stage"] = to_string(s.stage);
    js["k"] = s.k;
    js["cuts_first"] = cuts_to_json(s.cuts_first);
    js["cuts_second"] = cuts_to_json(s.cuts_second);
    js["similarity"] = optional_number(s.similarity_score);
    js["forward"] = ordering_to_json(s.forward);
    js["reversed"] = ordering_to_json(s.reversed);
    js["outcome"] = to_string(s.outcome);
    js["verdict"] = s.verdict ? json(to_string(*s.verdict)) : json(nullptr);
    stages.push_back(std::move(js));
  }
  j["stages"] = std::move(stages);
  j["final_outcome"] = to_string(r.final_outcome);
  j["final_verdict"] = r.final_verdict ? json(to_string(*r.final_verdict)) : json(nullptr);
  j["fixed"] = r.fixed;
  j["tokens_total"] = r.tokens_total;
  j["cost_total"] = optional_number(r.cost_total);
  j["wall_time_seconds"] = r.wall_time_seconds;
  return j;
}

EvaluationRecord record_from_json(const json& j) {
  try {
    EvaluationRecord r;
    r.task_id = j.at("task_id").get<std::string>();
    r.question_id = j.value("question_id", std::string());
    r.category = j.value("category", std::string());
    r.model_a = j.value("model_a", std::string());
    r.model_b = j.value("model_b", std::string());
    const auto form = parse_form(j.at("form").get<std::string>());
    if (!form) throw std::runtime_error("bad form");
    r.form = *form;
    r.k_requested = j.value("k_requested", kDefaultSegmentCount);
    r.judge_id = j.value("judge_id", std::string());
    for (const auto& js : j.at("stages")) {
      StageResult s;
      s.stage = *read_enum<Stage>(js, "stage", parse_stage);
      s.k = js.value("k", 1);
      s.cuts_first = cuts_from_json(js.value("cuts_first", json::array()));
      s.cuts_second = cuts_from_json(js.value("cuts_second", json::array()));
      s.similarity_score = read_optional_number(js, "similarity");
      s.forward = ordering_from_json(js.at("forward"));
      s.reversed = ordering_from_json(js.at("reversed"));
      s.outcome = *read_enum<Outcome>(js, "outcome", parse_outcome);
      s.verdict = read_enum<Verdict>(js, "verdict", parse_verdict);
      r.stages.push_back(std::move(s));
    }
    if (r.stages.empty()) throw std::runtime_error("record has no stages");
    r.final_outcome = *read_enum<Outcome>(j, "final_outcome", parse_outcome);
    r.final_verdict = read_enum<Verdict>(j, "final_verdict", parse_verdict);
    r.fixed = j.value("fixed", false);
    r.tokens_total = j.value("tokens_total", std::int64_t{0});
    r.cost_total = read_optional_number(j, "cost_total");
    r.wall_time_seconds = j.value("wall_time_seconds", 0.0);
    return r;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad record: ") + e.what());
  }
}

json failure_to_json(const FailedTask& f) {
  return {{"task_id", f.task_id},
          {"kind", f.kind},
          {"message", f.message},
          {"retriable", f.retriable}};
}

json report_to_json(const MetricsReport& m) {
  json j;
  j["overall"] = group_to_json(m.overall);
  j["agreement"] = m.agreement ? ratio_to_json(*m.agreement) : json(nullptr);
  j["agreement_origin"] =
      m.agreement_origin ? ratio_to_json(*m.agreement_origin) : json(nullptr);
  j["failed_tasks"] = m.failed_tasks;
  j["judge_calls"] = m.judge_calls;
  j["tokens_total"] = m.tokens_total;
  j["cost_total"] = optional_number(m.cost_total);
  j["time_total_seconds"] = m.time_total_seconds;
  for (const auto& [key, groups] :
       {std::pair{"by_form", &m.by_form}, std::pair{"by_category", &m.by_category},
        std::pair{"by_model_pair", &m.by_model_pair}}) {
    json obj = json::object();
    for (const auto& [name, g] : *groups) obj[name] = group_to_json(g);
    j[key] = std::move(obj);
  }
  return j;
}

void write_records(std::ostream& out, std::span<const EvaluationRecord> records) {
  for (const auto& r : records) out << record_to_json(r).dump() << "\n";
}

std::vector<EvaluationRecord> read_records(std::istream& in) {
  std::vector<EvaluationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("records line " + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return out;
}

std::vector<EvaluationRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open records " + path.string());
  return read_records(in);
}

std::string format_report(const MetricsReport& m) {
  std::ostringstream os;
  const auto& g = m.overall;
  os << "records evaluated     " << g.records << "\n";
  os << "failed tasks          " << m.failed_tasks << "\n";
  os << "origin consistency    " << pct(g.origin_consistency) << " ("
     << g.origin_consistency.numerator << "/" << g.origin_consistency.denominator
     << ")\n";
  os << "final consistency     " << pct(g.portia_consistency) << " ("
     << g.portia_consistency.numerator << "/" << g.portia_consistency.denominator
     << ")\n";
  os << "fixed coverage        " << pct(g.fixed_coverage) << " ("
     << g.fixed_coverage.numerator << "/" << g.fixed_coverage.denominator << ")\n";
  os << "unparsable            " << g.unparsable_original << " original, "
     << g.unparsable_final << " final\n";
  if (m.agreement) {
    os << "agreement             " << pct(*m.agreement) << " ("
       << m.agreement->numerator << "/" << m.agreement->denominator << ")\n";
    os << "agreement (stage 0)   " << pct(*m.agreement_origin) << " ("
       << m.agreement_origin->numerator << "/" << m.agreement_origin->denominator
       << ")\n";
  }
  os << "judge calls           " << m.judge_calls << "\n";
  os << "tokens                " << m.tokens_total << "\n";
  if (m.cost_total) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *m.cost_total);
    os << "cost                  " << buf << "\n";
  } else {
    os << "cost                  unknown\n";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f s", m.time_total_seconds);
  os << "time                  " << buf << "\n";
  table_rows(os, "by form", m.by_form);
  table_rows(os, "by category", m.by_category);
  table_rows(os, "by model pair", m.by_model_pair);
  return os.str();
}

void write_report_directory(const std::filesystem::path& dir,
                            std::span<const EvaluationRecord> records,
                            std::span<const FailedTask> failures,
                            const MetricsReport& report) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("records.jsonl");
    write_records(f, records);
  }
  {
    auto f = open("failures.jsonl");
    for (const auto& x : failures) f << failure_to_json(x).dump() << "\n";
  }
  {
    auto f = open("summary.json");
    f << report_to_json(report).dump(2) << "\n";
  }
  {
    auto f = open("report.txt");
    f << format_report(report);
  }
}

}  // namespace alignjudge
