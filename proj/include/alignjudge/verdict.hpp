#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <variant>

#include "alignjudge/prompting.hpp"

namespace alignjudge {

// Verdict as stated by the judge, in slot space.
enum class SlotVerdict { kA, kB, kTie };

// Verdict attributed to the underlying answers. The numeric values follow the
// 1 / 2 / 3 convention (first better / second better / tie).
enum class Verdict { kFirstAnswer = 1, kSecondAnswer = 2, kTie = 3 };

enum class ExtractionFailure { kNoPattern, kMalformedScores, kOutOfRange };

using ExtractionOutcome = std::variant<SlotVerdict, ExtractionFailure>;

std::string_view to_string(SlotVerdict v);
std::string_view to_string(Verdict v);
std::string_view to_string(ExtractionFailure f);
std::optional<Verdict> parse_verdict(std::string_view name);
std::optional<ExtractionFailure> parse_failure(std::string_view name);

// Likert value (1..7) to slot verdict.
//
// The default reads low values as a preference for slot A, a middle 4 as a
// tie and high values as a preference for slot B. The likert template text
// itself describes the opposite direction ("higher numbers indicated that
// Assistant A was better"), so the mapping is configurable; inverted() gives
// that reading.
class LikertMapping {
 public:
  static LikertMapping standard();
  static LikertMapping inverted();

  explicit LikertMapping(std::array<SlotVerdict, 7> table) : table_(table) {}

  SlotVerdict map(int value) const { return table_.at(value - 1); }

 private:
  std::array<SlotVerdict, 7> table_;
};

// Rule-based extraction:
//  relation: last [[A]] / [[B]] / [[C]] marker (C is a tie);
//  score: the first non-blank line's first two numbers, higher wins;
//  likert: the first number, which must be an integer in 1..7.
ExtractionOutcome extract(ComparisonForm form, std::string_view raw,
                          const LikertMapping& likert = LikertMapping::standard());

SlotVerdict swap(SlotVerdict v);

// Slot verdict to answer space for the ordering that produced it.
Verdict normalize(SlotVerdict slot, SlotOrdering ordering);

struct ConsistencyCheck {
  bool consistent = false;
  Verdict forward = Verdict::kTie;
  Verdict reversed = Verdict::kTie;

  // The shared verdict; only meaningful when consistent.
  std::optional<Verdict> verdict() const {
    return consistent ? std::optional<Verdict>(forward) : std::nullopt;
  }
  friend bool operator==(const ConsistencyCheck&,
                         const ConsistencyCheck&) = default;
};

ConsistencyCheck check_consistency(Verdict forward, Verdict reversed);

}  // namespace alignjudge
