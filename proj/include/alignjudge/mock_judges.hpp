#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "alignjudge/judges.hpp"

namespace alignjudge {

// Deterministic offline judges. Each is a pure function of the prompt text
// and its spec. Replies follow the prompt's comparison form: relation emits
// [[A]]/[[B]]/[[C]], score emits "9 7" / "7 9" / "8 8", likert emits 2 / 6 / 4
// (low favors slot A).
enum class MockKind {
  kScripted,       // replays fixtures keyed by SHA-256 of the prompt
  kQualityOracle,  // token overlap with a reference answer; position-blind
  kRecencyBiased,  // reference overlap plus weight on late prompt tokens
  kPrimacyBiased,  // reference overlap plus weight on early prompt tokens
  kAlwaysFirst,    // always prefers slot A
};

std::string_view to_string(MockKind kind);

struct MockJudgeSpec {
  MockKind kind = MockKind::kAlwaysFirst;
  std::string judge_id = "mock";
  std::map<std::string, std::string> fixtures;    // prompt sha256 -> reply
  std::map<std::string, std::string> references;  // question -> reference
  // Positional mocks: token weight (pos / len)^gamma for recency, or
  // ((len - pos + 1) / len)^gamma for primacy, pos counted from 1.
  double gamma = 4.0;
  // Weight of a slot's share of positional mass against reference overlap.
  double bias_strength = 1.0;
};

// Per-slot scores a mock computed for one prompt.
struct MockScores {
  double quality_a = 0.0;
  double quality_b = 0.0;
  double position_share_a = 0.0;
  double position_share_b = 0.0;
  double total_a = 0.0;
  double total_b = 0.0;
};

class MockJudge final : public Judge {
 public:
  explicit MockJudge(MockJudgeSpec spec);

  const std::string& id() const override { return spec_.judge_id; }
  RawJudgment evaluate(const PromptBundle& bundle) override;

  // Scores behind the verdict; not meaningful for scripted or always-first.
  MockScores score(std::string_view prompt) const;
  const MockJudgeSpec& spec() const { return spec_; }

 private:
  MockJudgeSpec spec_;
};

// Builds a spec from the "mock" object of a judge config:
//   {"type": "recency_biased", "gamma": 4, "bias_strength": 1.0,
//    "references": {question: answer}, "fixtures": {sha256: reply}}
// Throws JudgeError(kConfig) on unknown types.
MockJudgeSpec parse_mock_spec(std::string judge_id, const nlohmann::json& doc);

}  // namespace alignjudge
