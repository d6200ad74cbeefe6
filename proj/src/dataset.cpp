#include "alignjudge/dataset.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace alignjudge {

std::vector<DatasetEntry> read_dataset(std::istream& in) {
  std::vector<DatasetEntry> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "dataset line " + std::to_string(line_no);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
    DatasetEntry e;
    try {
      const auto& id = doc.at("question_id");
      e.question_id = id.is_string() ? id.get<std::string>() : id.dump();
      e.category = doc.value("category", std::string());
      e.question = doc.at("question").get<std::string>();
      e.answers = doc.at("answers").get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& ex) {
      throw std::runtime_error(where + ": " + ex.what());
    }
    if (!seen.insert(e.question_id).second) {
      throw std::runtime_error(where + ": duplicate question_id " + e.question_id);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<DatasetEntry> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  return read_dataset(in);
}

PairingManifest parse_pairing_manifest(const nlohmann::json& doc) {
  PairingManifest m;
  try {
    for (const auto& p : doc.at("pairs")) {
      if (p.is_array()) {
        if (p.size() != 2) throw std::runtime_error("pair must have two models");
        m.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
      } else {
        m.pairs.emplace_back(p.at("model_a").get<std::string>(),
                             p.at("model_b").get<std::string>());
      }
    }
    if (doc.contains("forms")) {
      for (const auto& f : doc.at("forms")) {
        const auto form = parse_form(f.get<std::string>());
        if (!form) throw std::runtime_error("unknown form " + f.dump());
        m.forms.push_back(*form);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("pairing manifest: ") + e.what());
  }
  if (m.forms.empty()) {
    m.forms = {ComparisonForm::kRelation, ComparisonForm::kScore,
               ComparisonForm::kLikert};
  }
  return m;
}

PairingManifest load_pairing_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pairing manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return parse_pairing_manifest(doc);
}

TaskPlan build_tasks(const std::vector<DatasetEntry>& dataset,
                     const PairingManifest& manifest, int k,
                     const std::string& judge_id) {
  TaskPlan plan;
  for (const auto& entry : dataset) {
    for (const auto& [ma, mb] : manifest.pairs) {
      for (ComparisonForm form : manifest.forms) {
        EvaluationTask t;
        t.task_id = make_task_id(entry.question_id, ma, mb, form);
        t.question = {entry.question_id, entry.category, entry.question};
        t.model_a = ma;
        t.model_b = mb;
        t.form = form;
        t.k = k;
        t.judge_id = judge_id;
        const auto a = entry.answers.find(ma);
        const auto b = entry.answers.find(mb);
        if (a == entry.answers.end() || b == entry.answers.end() ||
            a->second.empty() || b->second.empty()) {
          plan.skipped.push_back(
              {t.task_id, "missing_answer", "missing or empty answer", false});
          continue;
        }
        t.answer_a = a->second;
        t.answer_b = b->second;
        plan.tasks.push_back(std::move(t));
      }
    }
  }
  return plan;
}

}  // namespace alignjudge
