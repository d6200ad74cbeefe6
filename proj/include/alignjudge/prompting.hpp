#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace alignjudge {

enum class ComparisonForm { kRelation, kScore, kLikert };

std::string_view to_string(ComparisonForm form);
std::optional<ComparisonForm> parse_form(std::string_view name);

// Which underlying answer sits in slot A. Forward puts the first answer there.
enum class SlotOrdering { kForward, kReversed };

constexpr SlotOrdering flip(SlotOrdering o) {
  return o == SlotOrdering::kForward ? SlotOrdering::kReversed
                                     : SlotOrdering::kForward;
}
std::string_view to_string(SlotOrdering ordering);

enum class Slot { kA, kB };

struct PromptBundle {
  std::string text;
  ComparisonForm form = ComparisonForm::kRelation;
  SlotOrdering ordering = SlotOrdering::kForward;
  int k = 1;  // parts per answer; 1 for unsplit prompts
  std::size_t token_estimate = 0;
};

// Prompt templates. Each form template holds {Q}, {R1} and {R2} once, with
// the {R1} line before the {R2} line; the part wrapper holds {slot}, {i} and
// {part_i}. Split rendering replaces the {R1}..{R2} lines with interleaved
// wrapped parts separated by blank lines.
class TemplateSet {
 public:
  TemplateSet(std::string relation, std::string score, std::string likert,
              std::string part_wrapper);

  // Compiled-in copies of assets/templates.
  static const TemplateSet& builtin();
  // Reads relation.txt, score.txt, likert.txt and part.txt from `dir`.
  static TemplateSet load_directory(const std::filesystem::path& dir);

  const std::string& form_template(ComparisonForm form) const;
  const std::string& part_wrapper() const { return part_; }

 private:
  std::string relation_;
  std::string score_;
  std::string likert_;
  std::string part_;
};

// Deterministic estimate: one token per word run and per punctuation mark.
// Not a provider-exact count.
std::size_t estimate_tokens(std::string_view text);

PromptBundle render_unsplit(ComparisonForm form, std::string_view question,
                            std::string_view answer_a,
                            std::string_view answer_b,
                            SlotOrdering ordering = SlotOrdering::kForward,
                            const TemplateSet& templates = TemplateSet::builtin());

// Throws std::invalid_argument when the segment counts differ or are zero.
PromptBundle render_split(ComparisonForm form, std::string_view question,
                          std::span<const std::string> segments_a,
                          std::span<const std::string> segments_b,
                          SlotOrdering ordering = SlotOrdering::kForward,
                          const TemplateSet& templates = TemplateSet::builtin());

// Recovered layout of a rendered prompt: byte ranges of every slot content
// block, in prompt order. Unsplit blocks carry part == 0.
struct SlotPiece {
  Slot slot = Slot::kA;
  int part = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct ParsedPrompt {
  std::string question;
  std::vector<SlotPiece> pieces;
};

std::optional<ParsedPrompt> parse_prompt(std::string_view prompt);

// Concatenation of every piece for `slot`, in order.
std::string slot_content(std::string_view prompt, const ParsedPrompt& parsed,
                         Slot slot);

}  // namespace alignjudge
