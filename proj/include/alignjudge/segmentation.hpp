#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace alignjudge {

enum class SpanKind { kProse, kCode };

// Half-open byte range [start, end) of an answer.
struct ContentSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  SpanKind kind = SpanKind::kProse;

  friend bool operator==(const ContentSpan&, const ContentSpan&) = default;
};

enum class BoundaryKind { kSentenceEnd, kCodeStatementEnd, kBlockBoundary };

// A legal cut point: the byte offset where the next segment begins.
struct SplitPosition {
  std::size_t offset = 0;
  BoundaryKind kind = BoundaryKind::kSentenceEnd;

  friend bool operator==(const SplitPosition&, const SplitPosition&) = default;
  friend auto operator<=>(const SplitPosition& a, const SplitPosition& b) {
    return a.offset <=> b.offset;
  }
};

// An answer's raw UTF-8 text plus its prose/code span map.
//
// The spans are computed once on construction and partition [0, size()).
// Construction rejects malformed UTF-8 with std::invalid_argument.
class AnswerText {
 public:
  explicit AnswerText(std::string raw);

  const std::string& raw() const { return raw_; }
  std::span<const ContentSpan> spans() const { return spans_; }
  std::size_t size() const { return raw_.size(); }
  bool empty() const { return raw_.empty(); }

 private:
  std::string raw_;
  std::vector<ContentSpan> spans_;
};

// Triple-backtick fenced regions are code (fence lines themselves stay in
// the surrounding prose); everything else is prose. An unterminated fence
// runs to the end of the text.
std::vector<ContentSpan> classify_spans(std::string_view raw);

// Legal split positions, strictly increasing, each with 0 < offset < size.
//
// Prose: after terminal punctuation (. ! ?) and its trailing whitespace, after
// blank lines, and at the start of list-item lines ("- ", "* ", "+ ", "• ",
// "1. ", "1) "). When the whitespace after a sentence contains newlines the
// cut lands at the start of the next line so indentation stays with it.
// Code: after a newline reached at zero bracket nesting outside any string
// literal, when the following line is not blank.
// Fences: the start of an opening fence line and the end of a closing one.
std::vector<SplitPosition> detect_boundaries(const AnswerText& answer);

// Cuts the answer at `positions`. Throws std::invalid_argument unless the
// positions are strictly increasing and each is one of
// detect_boundaries(answer).
std::vector<std::string> split_at(const AnswerText& answer,
                                  std::span<const SplitPosition> positions);

}  // namespace alignjudge
