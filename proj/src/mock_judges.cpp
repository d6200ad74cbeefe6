#include "alignjudge/mock_judges.hpp"

#include <cmath>

#include "alignjudge/alignment.hpp"
#include "alignjudge/text_util.hpp"
#include "alignjudge/verdict.hpp"

namespace alignjudge {

namespace {

constexpr double kTieEpsilon = 1e-12;

std::string reply_for(ComparisonForm form, SlotVerdict v) {
  switch (form) {
    case ComparisonForm::kRelation:
      return v == SlotVerdict::kA ? "[[A]]" : v == SlotVerdict::kB ? "[[B]]" : "[[C]]";
    case ComparisonForm::kScore:
      return v == SlotVerdict::kA ? "9 7" : v == SlotVerdict::kB ? "7 9" : "8 8";
    case ComparisonForm::kLikert:
      return v == SlotVerdict::kA ? "2" : v == SlotVerdict::kB ? "6" : "4";
  }
  return "";
}

bool is_positional(MockKind k) {
  return k == MockKind::kRecencyBiased || k == MockKind::kPrimacyBiased;
}

}  // namespace

std::string_view to_string(MockKind kind) {
  switch (kind) {
    case MockKind::kScripted:
      return "scripted";
    case MockKind::kQualityOracle:
      return "quality_oracle";
    case MockKind::kRecencyBiased:
      return "recency_biased";
    case MockKind::kPrimacyBiased:
      return "primacy_biased";
    case MockKind::kAlwaysFirst:
      return "always_first";
  }
  return "unknown";
}

MockJudge::MockJudge(MockJudgeSpec spec) : spec_(std::move(spec)) {}

MockScores MockJudge::score(std::string_view prompt) const {
  const auto parsed = parse_prompt(prompt);
  if (!parsed) {
    throw JudgeError(JudgeError::Kind::kUnsupportedPrompt,
                     spec_.judge_id + ": prompt layout not recognized");
  }
  MockScores s;
  const auto ref = spec_.references.find(parsed->question);
  if (ref != spec_.references.end()) {
    const TokenSet reference(ref->second);
    s.quality_a = token_overlap_similarity(
        TokenSet(slot_content(prompt, *parsed, Slot::kA)), reference);
    s.quality_b = token_overlap_similarity(
        TokenSet(slot_content(prompt, *parsed, Slot::kB)), reference);
  } else if (spec_.kind == MockKind::kQualityOracle) {
    throw JudgeError(JudgeError::Kind::kConfig,
                     spec_.judge_id + ": no reference answer for question");
  }

  if (is_positional(spec_.kind)) {
    const auto tokens = text::lexical_tokens(prompt);
    const double len = static_cast<double>(tokens.size());
    double mass_a = 0.0;
    double mass_b = 0.0;
    std::size_t piece = 0;
    const auto& pieces = parsed->pieces;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const std::size_t at = tokens[t].begin;
      while (piece < pieces.size() && pieces[piece].end <= at) ++piece;
      if (piece == pieces.size()) break;
      if (at < pieces[piece].begin) continue;
      const double pos = static_cast<double>(t + 1);
      const double rel = spec_.kind == MockKind::kRecencyBiased
                             ? pos / len
                             : (len - pos + 1.0) / len;
      const double w = std::pow(rel, spec_.gamma);
      (pieces[piece].slot == Slot::kA ? mass_a : mass_b) += w;
    }
    const double total = mass_a + mass_b;
    s.position_share_a = total > 0 ? mass_a / total : 0.5;
    s.position_share_b = total > 0 ? mass_b / total : 0.5;
  }
  s.total_a = s.quality_a + spec_.bias_strength * s.position_share_a;
  s.total_b = s.quality_b + spec_.bias_strength * s.position_share_b;
  return s;
}

RawJudgment MockJudge::evaluate(const PromptBundle& bundle) {
  RawJudgment out;
  out.input_tokens = static_cast<std::int64_t>(bundle.token_estimate);
  switch (spec_.kind) {
    case MockKind::kScripted: {
      const auto it = spec_.fixtures.find(sha256_hex(bundle.text));
      if (it == spec_.fixtures.end()) {
        throw JudgeError(JudgeError::Kind::kNoFixture,
                         spec_.judge_id + ": no fixture for prompt");
      }
      out.text = it->second;
      break;
    }
    case MockKind::kAlwaysFirst:
      out.text = reply_for(bundle.form, SlotVerdict::kA);
      break;
    case MockKind::kQualityOracle:
    case MockKind::kRecencyBiased:
    case MockKind::kPrimacyBiased: {
      const MockScores s = score(bundle.text);
      const double diff = s.total_a - s.total_b;
      const SlotVerdict v = std::abs(diff) <= kTieEpsilon ? SlotVerdict::kTie
                            : diff > 0                    ? SlotVerdict::kA
                                                          : SlotVerdict::kB;
      out.text = reply_for(bundle.form, v);
      break;
    }
  }
  out.output_tokens = static_cast<std::int64_t>(estimate_tokens(out.text));
  return out;
}

MockJudgeSpec parse_mock_spec(std::string judge_id, const nlohmann::json& doc) {
  MockJudgeSpec spec;
  spec.judge_id = std::move(judge_id);
  const std::string type = doc.value("type", std::string("always_first"));
  bool known = false;
  for (MockKind k : {MockKind::kScripted, MockKind::kQualityOracle,
                     MockKind::kRecencyBiased, MockKind::kPrimacyBiased,
                     MockKind::kAlwaysFirst}) {
    if (to_string(k) == type) {
      spec.kind = k;
      known = true;
    }
  }
  if (!known) {
    throw JudgeError(JudgeError::Kind::kConfig, "unknown mock type: " + type);
  }
  try {
    spec.gamma = doc.value("gamma", spec.gamma);
    spec.bias_strength = doc.value("bias_strength", spec.bias_strength);
    spec.fixtures = doc.value("fixtures", spec.fixtures);
    spec.references = doc.value("references", spec.references);
  } catch (const nlohmann::json::exception& e) {
    throw JudgeError(JudgeError::Kind::kConfig,
                     std::string("bad mock spec: ") + e.what());
  }
  return spec;
}

}  // namespace alignjudge
