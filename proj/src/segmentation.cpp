#include "alignjudge/segmentation.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "alignjudge/text_util.hpp"

namespace alignjudge {

namespace {

using text::is_ascii_space;

struct Line {
  std::size_t start;
  std::size_t end;   // excludes the newline
  std::size_t next;  // start of the following line
};

Line line_at(std::string_view raw, std::size_t start) {
  const std::size_t nl = raw.find('\n', start);
  if (nl == std::string_view::npos) return {start, raw.size(), raw.size()};
  return {start, nl, nl + 1};
}

std::string_view strip_indent(std::string_view line, std::size_t max_spaces) {
  std::size_t i = 0;
  while (i < line.size() && i < max_spaces && line[i] == ' ') ++i;
  return line.substr(i);
}

bool is_opening_fence(std::string_view line) {
  return strip_indent(line, 3).starts_with("```");
}

bool is_closing_fence(std::string_view line) {
  std::string_view rest = strip_indent(line, 3);
  if (!rest.starts_with("```")) return false;
  for (char c : rest) {
    if (c != '`' && !is_ascii_space(c)) return false;
  }
  return true;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), is_ascii_space);
}

bool starts_list_item(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  std::string_view rest = line.substr(i);
  if (rest.starts_with("- ") || rest.starts_with("* ") ||
      rest.starts_with("+ ") || rest.starts_with("\xE2\x80\xA2 ")) {
    return true;
  }
  std::size_t d = 0;
  while (d < rest.size() && d < 4 && rest[d] >= '0' && rest[d] <= '9') ++d;
  if (d == 0 || d > 3 || d + 1 >= rest.size()) return false;
  return (rest[d] == '.' || rest[d] == ')') && rest[d + 1] == ' ';
}

constexpr std::array<std::string_view, 10> kAbbreviations = {
    "e.g.", "i.e.", "vs.", "mr.", "mrs.", "ms.", "dr.", "st.", "cf.", "no."};

// True when the word ending at `period` (inclusive) should not end a sentence:
// an ordered-list marker such as "12." at line start, or a known abbreviation.
bool is_non_terminal_period(std::string_view raw, std::size_t span_start,
                            std::size_t period) {
  std::size_t w = period;
  while (w > span_start && !is_ascii_space(raw[w - 1])) --w;
  std::string_view word = raw.substr(w, period + 1 - w);
  const bool digits = word.size() > 1 &&
                      std::all_of(word.begin(), word.end() - 1,
                                  [](char c) { return c >= '0' && c <= '9'; });
  if (digits) {
    std::size_t b = w;
    while (b > 0 && (raw[b - 1] == ' ' || raw[b - 1] == '\t')) --b;
    if (b == 0 || raw[b - 1] == '\n') return true;
  }
  const std::string lower = text::ascii_lower(word);
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) !=
         kAbbreviations.end();
}

bool is_closer(std::string_view raw, std::size_t i, std::size_t& width) {
  const char c = raw[i];
  if (c == '"' || c == '\'' || c == ')' || c == ']' || c == '*' || c == '_') {
    width = 1;
    return true;
  }
  // ” ’ »
  const std::string_view rest = raw.substr(i);
  if (rest.starts_with("\xE2\x80\x9D") || rest.starts_with("\xE2\x80\x99")) {
    width = 3;
    return true;
  }
  if (rest.starts_with("\xC2\xBB")) {
    width = 2;
    return true;
  }
  return false;
}

// Position after a whitespace run starting at `from` (bounded by `end`),
// pulled back to just after the run's last newline when it has one.
std::size_t after_whitespace(std::string_view raw, std::size_t from,
                             std::size_t end) {
  std::size_t k = from;
  std::size_t after_newline = std::string_view::npos;
  while (k < end && is_ascii_space(raw[k])) {
    if (raw[k] == '\n') after_newline = k + 1;
    ++k;
  }
  return after_newline != std::string_view::npos ? after_newline : k;
}

void detect_prose(std::string_view raw, const ContentSpan& span,
                  std::vector<SplitPosition>& out) {
  const std::size_t end = span.end;
  for (std::size_t i = span.start; i < end; ++i) {
    const char c = raw[i];
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i + 1;
      while (j < end && (raw[j] == '.' || raw[j] == '!' || raw[j] == '?')) ++j;
      std::size_t width = 0;
      while (j < end && is_closer(raw, j, width)) j += width;
      if (j >= end || !is_ascii_space(raw[j])) continue;
      if (c == '.' && j == i + 1 && is_non_terminal_period(raw, span.start, i)) {
        continue;
      }
      out.push_back({after_whitespace(raw, j, end), BoundaryKind::kSentenceEnd});
      i = j - 1;
    } else if (c == '\n') {
      const Line next = line_at(raw, i + 1);
      if (next.start >= end) continue;
      const std::string_view next_text =
          raw.substr(next.start, next.end - next.start);
      if (is_blank(next_text)) {
        out.push_back(
            {after_whitespace(raw, i, end), BoundaryKind::kSentenceEnd});
      } else if (starts_list_item(next_text)) {
        out.push_back({next.start, BoundaryKind::kSentenceEnd});
      }
    }
  }
}

// '#' opens a line comment at line start or when surrounded by whitespace,
// which covers Python/shell comments without eating CSS colors or C macros.
bool opens_hash_comment(std::string_view raw, std::size_t i,
                        std::size_t line_start) {
  std::size_t b = i;
  while (b > line_start && (raw[b - 1] == ' ' || raw[b - 1] == '\t')) --b;
  if (b == line_start) return true;
  const bool space_before = is_ascii_space(raw[i - 1]);
  const bool space_after = i + 1 >= raw.size() || is_ascii_space(raw[i + 1]);
  return space_before && space_after;
}

void detect_code(std::string_view raw, const ContentSpan& span,
                 std::vector<SplitPosition>& out) {
  int depth = 0;
  char quote = 0;
  bool triple = false;
  std::size_t line_start = span.start;
  const std::size_t end = span.end;
  for (std::size_t i = span.start; i < end; ++i) {
    const char c = raw[i];
    if (quote != 0) {
      if (c == '\\') {
        ++i;
        continue;
      }
      if (triple) {
        if (c == quote && i + 2 < end && raw[i + 1] == quote &&
            raw[i + 2] == quote) {
          quote = 0;
          i += 2;
        }
        if (c == '\n') line_start = i + 1;
        continue;
      }
      if (c == quote) {
        quote = 0;
        continue;
      }
      if (c != '\n') continue;
      quote = 0;  // single-line literal left open; recover at the newline
    }
    switch (c) {
      case '(':
      case '[':
      case '{':
        ++depth;
        break;
      case ')':
      case ']':
      case '}':
        depth = std::max(0, depth - 1);
        break;
      case '"':
      case '\'':
      case '`':
        quote = c;
        triple = c != '`' && i + 2 < end && raw[i + 1] == c && raw[i + 2] == c;
        if (triple) i += 2;
        break;
      case '/':
      case '#':
        if ((c == '/' && i + 1 < end && raw[i + 1] == '/') ||
            (c == '#' && opens_hash_comment(raw, i, line_start))) {
          const std::size_t nl = raw.find('\n', i);
          i = (nl == std::string_view::npos || nl >= end) ? end - 1 : nl - 1;
        }
        break;
      case '\n': {
        line_start = i + 1;
        const bool continued = i > span.start && raw[i - 1] == '\\';
        if (depth != 0 || continued || i + 1 >= end) break;
        const Line next = line_at(raw, i + 1);
        const std::size_t next_end = std::min(next.end, end);
        if (!is_blank(raw.substr(next.start, next_end - next.start))) {
          out.push_back({i + 1, BoundaryKind::kCodeStatementEnd});
        }
        break;
      }
      default:
        break;
    }
  }
}

void detect_fences(std::string_view raw, const ContentSpan& span,
                   std::vector<SplitPosition>& out) {
  // The opening fence is the line ending just before span.start.
  std::size_t fence_start = 0;
  if (span.start >= 2) {
    const std::size_t nl = raw.rfind('\n', span.start - 2);
    fence_start = nl == std::string_view::npos ? 0 : nl + 1;
  }
  out.push_back({fence_start, BoundaryKind::kBlockBoundary});
  if (span.end < raw.size()) {
    out.push_back({line_at(raw, span.end).next, BoundaryKind::kBlockBoundary});
  }
}

int kind_priority(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::kBlockBoundary:
      return 0;
    case BoundaryKind::kCodeStatementEnd:
      return 1;
    case BoundaryKind::kSentenceEnd:
      return 2;
  }
  return 3;
}

}  // namespace

AnswerText::AnswerText(std::string raw) : raw_(std::move(raw)) {
  if (!text::is_valid_utf8(raw_)) {
    throw std::invalid_argument("answer text is not valid UTF-8");
  }
  spans_ = classify_spans(raw_);
}

std::vector<ContentSpan> classify_spans(std::string_view raw) {
  std::vector<ContentSpan> spans;
  std::size_t prose_start = 0;
  bool in_code = false;
  std::size_t code_start = 0;
  for (std::size_t pos = 0; pos < raw.size();) {
    const Line line = line_at(raw, pos);
    const std::string_view text = raw.substr(line.start, line.end - line.start);
    if (!in_code && is_opening_fence(text)) {
      in_code = true;
      code_start = line.next;
    } else if (in_code && is_closing_fence(text)) {
      if (line.start > code_start) {
        if (code_start > prose_start) {
          spans.push_back({prose_start, code_start, SpanKind::kProse});
        }
        spans.push_back({code_start, line.start, SpanKind::kCode});
        prose_start = line.start;
      }
      in_code = false;
    }
    pos = line.next;
  }
  if (in_code && code_start < raw.size()) {
    if (code_start > prose_start) {
      spans.push_back({prose_start, code_start, SpanKind::kProse});
    }
    spans.push_back({code_start, raw.size(), SpanKind::kCode});
    prose_start = raw.size();
  }
  if (prose_start < raw.size()) {
    spans.push_back({prose_start, raw.size(), SpanKind::kProse});
  }
  return spans;
}

std::vector<SplitPosition> detect_boundaries(const AnswerText& answer) {
  const std::string_view raw = answer.raw();
  std::vector<SplitPosition> found;
  for (const ContentSpan& span : answer.spans()) {
    if (span.kind == SpanKind::kProse) {
      detect_prose(raw, span, found);
    } else {
      detect_code(raw, span, found);
      detect_fences(raw, span, found);
    }
  }
  std::erase_if(found, [&](const SplitPosition& p) {
    return p.offset == 0 || p.offset >= raw.size();
  });
  std::sort(found.begin(), found.end(),
            [](const SplitPosition& a, const SplitPosition& b) {
              if (a.offset != b.offset) return a.offset < b.offset;
              return kind_priority(a.kind) < kind_priority(b.kind);
            });
  found.erase(std::unique(found.begin(), found.end(),
                          [](const SplitPosition& a, const SplitPosition& b) {
                            return a.offset == b.offset;
                          }),
              found.end());
  return found;
}

std::vector<std::string> split_at(const AnswerText& answer,
                                  std::span<const SplitPosition> positions) {
  const std::vector<SplitPosition> legal = detect_boundaries(answer);
  std::size_t prev = 0;
  for (const SplitPosition& p : positions) {
    // Legal offsets are never 0, so prev == 0 doubles as "no cut yet".
    if (p.offset <= prev) {
      throw std::invalid_argument("split positions must be strictly increasing");
    }
    if (!std::binary_search(legal.begin(), legal.end(), p)) {
      throw std::invalid_argument("split position " + std::to_string(p.offset) +
                                  " is not a detected boundary");
    }
    prev = p.offset;
  }
  std::vector<std::string> segments;
  segments.reserve(positions.size() + 1);
  std::size_t start = 0;
  for (const SplitPosition& p : positions) {
    segments.emplace_back(answer.raw().substr(start, p.offset - start));
    start = p.offset;
  }
  segments.emplace_back(answer.raw().substr(start));
  return segments;
}

}  // namespace alignjudge
