#include "alignjudge/verdict.hpp"

#include <cctype>
#include <cstdlib>
#include <string>
#include <vector>

#include "alignjudge/text_util.hpp"

namespace alignjudge {

namespace {

struct Number {
  double value = 0.0;
  bool integral = true;
};

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Numbers that stand alone: digits not glued to letters, optionally with a
// fractional part. "7", "8.5" and "7/10" (7 and 10) count; "gpt4" does not.
std::vector<Number> scan_numbers(std::string_view s) {
  std::vector<Number> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i])) {
      ++i;
      continue;
    }
    const bool glued_before =
        i > 0 && (std::isalpha(static_cast<unsigned char>(s[i - 1])) ||
                  s[i - 1] == '_' || s[i - 1] == '.');
    std::size_t j = i;
    while (j < s.size() && is_digit(s[j])) ++j;
    bool integral = true;
    if (j + 1 < s.size() && s[j] == '.' && is_digit(s[j + 1])) {
      integral = false;
      ++j;
      while (j < s.size() && is_digit(s[j])) ++j;
    }
    const bool glued_after =
        j < s.size() &&
        (std::isalpha(static_cast<unsigned char>(s[j])) || s[j] == '_');
    if (!glued_before && !glued_after) {
      const std::string token(s.substr(i, j - i));
      out.push_back({std::strtod(token.c_str(), nullptr), integral});
    }
    i = j;
  }
  return out;
}

std::string_view first_nonblank_line(std::string_view raw) {
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    const std::string_view line = text::trim(raw.substr(pos, nl - pos));
    if (!line.empty()) return line;
    pos = nl + 1;
  }
  return {};
}

ExtractionOutcome extract_relation(std::string_view raw) {
  std::optional<SlotVerdict> last;
  for (std::size_t p = raw.find("[["); p != std::string_view::npos;
       p = raw.find("[[", p + 1)) {
    if (p + 5 > raw.size()) break;
    if (raw.substr(p + 3, 2) != "]]") continue;
    switch (raw[p + 2]) {
      case 'A':
        last = SlotVerdict::kA;
        break;
      case 'B':
        last = SlotVerdict::kB;
        break;
      case 'C':
        last = SlotVerdict::kTie;
        break;
      default:
        break;
    }
  }
  if (!last) return ExtractionFailure::kNoPattern;
  return *last;
}

ExtractionOutcome extract_score(std::string_view raw) {
  if (scan_numbers(raw).empty()) return ExtractionFailure::kNoPattern;
  const std::vector<Number> nums = scan_numbers(first_nonblank_line(raw));
  if (nums.size() < 2) return ExtractionFailure::kMalformedScores;
  if (nums[0].value > nums[1].value) return SlotVerdict::kA;
  if (nums[1].value > nums[0].value) return SlotVerdict::kB;
  return SlotVerdict::kTie;
}

ExtractionOutcome extract_likert(std::string_view raw,
                                 const LikertMapping& mapping) {
  const std::vector<Number> nums = scan_numbers(raw);
  if (nums.empty()) return ExtractionFailure::kNoPattern;
  const Number& n = nums.front();
  if (!n.integral || n.value < 1.0 || n.value > 7.0) {
    return ExtractionFailure::kOutOfRange;
  }
  return mapping.map(static_cast<int>(n.value));
}

}  // namespace

std::string_view to_string(SlotVerdict v) {
  switch (v) {
    case SlotVerdict::kA:
      return "A";
    case SlotVerdict::kB:
      return "B";
    case SlotVerdict::kTie:
      return "tie";
  }
  return "?";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kFirstAnswer:
      return "first";
    case Verdict::kSecondAnswer:
      return "second";
    case Verdict::kTie:
      return "tie";
  }
  return "?";
}

std::string_view to_string(ExtractionFailure f) {
  switch (f) {
    case ExtractionFailure::kNoPattern:
      return "no_pattern";
    case ExtractionFailure::kMalformedScores:
      return "malformed_scores";
    case ExtractionFailure::kOutOfRange:
      return "out_of_range";
  }
  return "?";
}

std::optional<Verdict> parse_verdict(std::string_view name) {
  if (name == "first") return Verdict::kFirstAnswer;
  if (name == "second") return Verdict::kSecondAnswer;
  if (name == "tie") return Verdict::kTie;
  return std::nullopt;
}

std::optional<ExtractionFailure> parse_failure(std::string_view name) {
  if (name == "no_pattern") return ExtractionFailure::kNoPattern;
  if (name == "malformed_scores") return ExtractionFailure::kMalformedScores;
  if (name == "out_of_range") return ExtractionFailure::kOutOfRange;
  return std::nullopt;
}

LikertMapping LikertMapping::standard() {
  using enum SlotVerdict;
  return LikertMapping({kA, kA, kA, kTie, kB, kB, kB});
}

LikertMapping LikertMapping::inverted() {
  using enum SlotVerdict;
  return LikertMapping({kB, kB, kB, kTie, kA, kA, kA});
}

ExtractionOutcome extract(ComparisonForm form, std::string_view raw,
                          const LikertMapping& likert) {
  switch (form) {
    case ComparisonForm::kRelation:
      return extract_relation(raw);
    case ComparisonForm::kScore:
      return extract_score(raw);
    case ComparisonForm::kLikert:
      return extract_likert(raw, likert);
  }
  return ExtractionFailure::kNoPattern;
}

SlotVerdict swap(SlotVerdict v) {
  switch (v) {
    case SlotVerdict::kA:
      return SlotVerdict::kB;
    case SlotVerdict::kB:
      return SlotVerdict::kA;
    case SlotVerdict::kTie:
      return SlotVerdict::kTie;
  }
  return v;
}

Verdict normalize(SlotVerdict slot, SlotOrdering ordering) {
  if (slot == SlotVerdict::kTie) return Verdict::kTie;
  const bool a = slot == SlotVerdict::kA;
  const bool forward = ordering == SlotOrdering::kForward;
  return a == forward ? Verdict::kFirstAnswer : Verdict::kSecondAnswer;
}

ConsistencyCheck check_consistency(Verdict forward, Verdict reversed) {
  return {forward == reversed, forward, reversed};
}

}  // namespace alignjudge
