#include "alignjudge/prompting.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "alignjudge/text_util.hpp"
#include "embedded_templates.hpp"

namespace alignjudge {

namespace {

constexpr std::string_view kQuestionTag = "[Question] ";
constexpr std::string_view kStartTag = "[The Start of Assistant ";
constexpr std::string_view kPartSeparator = "\n\n";

using Bindings = std::map<std::string_view, std::string_view>;

// Single pass: substituted text is never rescanned, so answers that contain
// "{R2}" and the like come through verbatim.
std::string substitute(std::string_view tmpl, const Bindings& bindings) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string_view name = tmpl.substr(i + 1, close - i - 1);
        if (auto it = bindings.find(name); it != bindings.end()) {
          out.append(it->second);
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

std::size_t count_of(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t p = hay.find(needle); p != std::string_view::npos;
       p = hay.find(needle, p + needle.size())) {
    ++n;
  }
  return n;
}

void validate_form_template(std::string_view name, std::string_view tmpl) {
  for (std::string_view ph : {"{Q}", "{R1}", "{R2}"}) {
    if (count_of(tmpl, ph) != 1) {
      throw std::invalid_argument(std::string(name) + " template must contain " +
                                  std::string(ph) + " exactly once");
    }
  }
  if (tmpl.find("{R1}") > tmpl.find("{R2}")) {
    throw std::invalid_argument(std::string(name) +
                                " template must place {R1} before {R2}");
  }
}

// [start of the {R1} line, end of the {R2} line).
std::pair<std::size_t, std::size_t> answer_block(std::string_view tmpl) {
  const std::size_t r1 = tmpl.find("{R1}");
  const std::size_t r2 = tmpl.find("{R2}");
  const std::size_t nl = tmpl.rfind('\n', r1);
  const std::size_t begin = nl == std::string_view::npos ? 0 : nl + 1;
  std::size_t end = tmpl.find('\n', r2);
  if (end == std::string_view::npos) end = tmpl.size();
  return {begin, end};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PromptBundle make_bundle(std::string text, ComparisonForm form,
                         SlotOrdering ordering, int k) {
  PromptBundle b;
  b.token_estimate = estimate_tokens(text);
  b.text = std::move(text);
  b.form = form;
  b.ordering = ordering;
  b.k = k;
  return b;
}

}  // namespace

std::string_view to_string(ComparisonForm form) {
  switch (form) {
    case ComparisonForm::kRelation:
      return "relation";
    case ComparisonForm::kScore:
      return "score";
    case ComparisonForm::kLikert:
      return "likert";
  }
  return "unknown";
}

std::optional<ComparisonForm> parse_form(std::string_view name) {
  if (name == "relation") return ComparisonForm::kRelation;
  if (name == "score") return ComparisonForm::kScore;
  if (name == "likert") return ComparisonForm::kLikert;
  return std::nullopt;
}

std::string_view to_string(SlotOrdering ordering) {
  return ordering == SlotOrdering::kForward ? "forward" : "reversed";
}

TemplateSet::TemplateSet(std::string relation, std::string score,
                         std::string likert, std::string part_wrapper)
    : relation_(std::move(relation)),
      score_(std::move(score)),
      likert_(std::move(likert)),
      part_(std::move(part_wrapper)) {
  validate_form_template("relation", relation_);
  validate_form_template("score", score_);
  validate_form_template("likert", likert_);
  for (std::string_view ph : {"{slot}", "{i}", "{part_i}"}) {
    if (part_.find(ph) == std::string::npos) {
      throw std::invalid_argument("part wrapper must contain " +
                                  std::string(ph));
    }
  }
}

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet set(std::string(embedded::kRelationTemplate),
                               std::string(embedded::kScoreTemplate),
                               std::string(embedded::kLikertTemplate),
                               std::string(embedded::kPartTemplate));
  return set;
}

TemplateSet TemplateSet::load_directory(const std::filesystem::path& dir) {
  return TemplateSet(read_file(dir / "relation.txt"),
                     read_file(dir / "score.txt"),
                     read_file(dir / "likert.txt"), read_file(dir / "part.txt"));
}

const std::string& TemplateSet::form_template(ComparisonForm form) const {
  switch (form) {
    case ComparisonForm::kRelation:
      return relation_;
    case ComparisonForm::kScore:
      return score_;
    case ComparisonForm::kLikert:
      return likert_;
  }
  throw std::invalid_argument("unknown comparison form");
}

std::size_t estimate_tokens(std::string_view text) {
  return text::lexical_tokens(text).size();
}

PromptBundle render_unsplit(ComparisonForm form, std::string_view question,
                            std::string_view answer_a,
                            std::string_view answer_b, SlotOrdering ordering,
                            const TemplateSet& templates) {
  const Bindings bindings{{"Q", question}, {"R1", answer_a}, {"R2", answer_b}};
  return make_bundle(substitute(templates.form_template(form), bindings), form,
                     ordering, 1);
}

PromptBundle render_split(ComparisonForm form, std::string_view question,
                          std::span<const std::string> segments_a,
                          std::span<const std::string> segments_b,
                          SlotOrdering ordering, const TemplateSet& templates) {
  if (segments_a.size() != segments_b.size()) {
    throw std::invalid_argument("both answers need the same number of parts");
  }
  if (segments_a.empty()) {
    throw std::invalid_argument("split rendering needs at least one part");
  }
  const std::string_view tmpl = templates.form_template(form);
  const auto [begin, end] = answer_block(tmpl);
  const Bindings question_only{{"Q", question}};

  std::string out = substitute(tmpl.substr(0, begin), question_only);
  for (std::size_t i = 0; i < segments_a.size(); ++i) {
    const std::string index = std::to_string(i + 1);
    if (i > 0) out.append(kPartSeparator);
    out.append(substitute(templates.part_wrapper(),
                          {{"slot", "A"}, {"i", index}, {"part_i", segments_a[i]}}));
    out.append(kPartSeparator);
    out.append(substitute(templates.part_wrapper(),
                          {{"slot", "B"}, {"i", index}, {"part_i", segments_b[i]}}));
  }
  out.append(substitute(tmpl.substr(end), question_only));
  return make_bundle(std::move(out), form, ordering,
                     static_cast<int>(segments_a.size()));
}

std::optional<ParsedPrompt> parse_prompt(std::string_view prompt) {
  const std::size_t q = prompt.find(kQuestionTag);
  if (q == std::string_view::npos) return std::nullopt;
  const std::size_t q_begin = q + kQuestionTag.size();
  const std::size_t first = prompt.find(std::string(kPartSeparator) +
                                            std::string(kStartTag),
                                        q_begin);
  if (first == std::string_view::npos) return std::nullopt;

  ParsedPrompt parsed;
  parsed.question = std::string(prompt.substr(q_begin, first - q_begin));
  std::size_t cursor = first + kPartSeparator.size();
  while (prompt.substr(cursor).starts_with(kStartTag)) {
    std::size_t p = cursor + kStartTag.size();
    if (p >= prompt.size()) return std::nullopt;
    SlotPiece piece;
    const char letter = prompt[p];
    if (letter != 'A' && letter != 'B') return std::nullopt;
    piece.slot = letter == 'A' ? Slot::kA : Slot::kB;
    ++p;
    std::string suffix;
    constexpr std::string_view kWhole = "'s response] ";
    constexpr std::string_view kPart = "'s response part ";
    if (prompt.substr(p).starts_with(kWhole)) {
      p += kWhole.size();
      suffix = "'s response]";
    } else if (prompt.substr(p).starts_with(kPart)) {
      p += kPart.size();
      int n = 0;
      std::size_t digits = 0;
      while (p < prompt.size() && prompt[p] >= '0' && prompt[p] <= '9') {
        n = n * 10 + (prompt[p] - '0');
        ++p;
        ++digits;
      }
      if (digits == 0 || !prompt.substr(p).starts_with("] ")) {
        return std::nullopt;
      }
      p += 2;
      piece.part = n;
      suffix = "'s response part " + std::to_string(n) + "]";
    } else {
      return std::nullopt;
    }
    const std::string end_marker =
        std::string(" [The End of Assistant ") + letter + suffix;
    const std::size_t e = prompt.find(end_marker, p);
    if (e == std::string_view::npos) return std::nullopt;
    piece.begin = p;
    piece.end = e;
    parsed.pieces.push_back(piece);
    cursor = e + end_marker.size();
    // Tolerate a trailing space after the end marker.
    while (cursor < prompt.size() && prompt[cursor] == ' ') ++cursor;
    if (!prompt.substr(cursor).starts_with(kPartSeparator)) break;
    cursor += kPartSeparator.size();
  }
  if (parsed.pieces.empty()) return std::nullopt;
  return parsed;
}

std::string slot_content(std::string_view prompt, const ParsedPrompt& parsed,
                         Slot slot) {
  std::string out;
  for (const SlotPiece& piece : parsed.pieces) {
    if (piece.slot == slot) {
      out.append(prompt.substr(piece.begin, piece.end - piece.begin));
    }
  }
  return out;
}

}  // namespace alignjudge
