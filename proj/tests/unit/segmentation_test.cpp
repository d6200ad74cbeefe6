#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "alignjudge/segmentation.hpp"
#include "alignjudge/text_util.hpp"
#include "support/generators.hpp"

namespace aj = alignjudge;
using aj::AnswerText;
using aj::BoundaryKind;
using aj::SpanKind;
using aj::SplitPosition;

namespace {

std::vector<std::size_t> offsets(const std::vector<SplitPosition>& bs) {
  std::vector<std::size_t> out;
  for (const auto& b : bs) out.push_back(b.offset);
  return out;
}

std::vector<std::size_t> boundary_offsets(const std::string& text) {
  return offsets(aj::detect_boundaries(AnswerText(text)));
}

// Independent check: bracket depth of `code` measured outside quotes and
// line comments.
int bracket_depth(std::string_view code) {
  int depth = 0;
  char quote = 0;
  bool comment = false;
  for (std::size_t i = 0; i < code.size(); ++i) {
    const char c = code[i];
    if (comment) {
      comment = c != '\n';
      continue;
    }
    if (!quote && ((c == '/' && i + 1 < code.size() && code[i + 1] == '/') ||
                   (c == '#' && (i == 0 || code[i - 1] == ' ' || code[i - 1] == '\n')))) {
      comment = true;
      continue;
    }
    if (quote) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '(' || c == '[' || c == '{') {
      ++depth;
    } else if (c == ')' || c == ']' || c == '}') {
      --depth;
    }
  }
  return depth;
}

}  // namespace

TEST(ClassifySpans, NoFenceIsSingleProseSpan) {
  const auto spans = aj::classify_spans("plain text. more text.");
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0], (aj::ContentSpan{0, 22, SpanKind::kProse}));
}

TEST(ClassifySpans, OneFenceGivesProseCodeProse) {
  const std::string text = "Intro:\n```\nx = 1\n```\nOutro.";
  const auto spans = aj::classify_spans(text);
  ASSERT_EQ(spans.size(), 3u);
  EXPECT_EQ(spans[0].kind, SpanKind::kProse);
  EXPECT_EQ(spans[1].kind, SpanKind::kCode);
  EXPECT_EQ(spans[2].kind, SpanKind::kProse);
  EXPECT_EQ(text.substr(spans[1].start, spans[1].end - spans[1].start), "x = 1\n");
  EXPECT_EQ(spans.front().start, 0u);
  EXPECT_EQ(spans.back().end, text.size());
}

TEST(ClassifySpans, UnterminatedFenceRunsToEnd) {
  const std::string text = "See:\n```cpp\nint x = 0;\nint y";
  const auto spans = aj::classify_spans(text);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].kind, SpanKind::kProse);
  EXPECT_EQ(spans[1].kind, SpanKind::kCode);
  EXPECT_EQ(spans[1].end, text.size());
}

TEST(ClassifySpans, SpansPartitionText) {
  aj::testing::Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const std::string text = aj::testing::random_answer(rng);
    const auto spans = aj::classify_spans(text);
    ASSERT_FALSE(spans.empty());
    std::size_t at = 0;
    for (const auto& s : spans) {
      ASSERT_EQ(s.start, at) << text;
      ASSERT_LT(s.start, s.end) << text;
      at = s.end;
    }
    EXPECT_EQ(at, text.size());
  }
}

TEST(AnswerText, RejectsInvalidUtf8) {
  EXPECT_THROW(AnswerText(std::string("bad \xC3\x28 bytes")), std::invalid_argument);
  EXPECT_NO_THROW(AnswerText("café 日本語"));
}

TEST(DetectBoundaries, SingleSentenceBreak) {
  const auto bs = aj::detect_boundaries(AnswerText("Hello. World."));
  ASSERT_EQ(bs.size(), 1u);
  EXPECT_EQ(bs[0].offset, 7u);
  EXPECT_EQ(bs[0].kind, BoundaryKind::kSentenceEnd);
}

TEST(DetectBoundaries, NoPunctuationMeansNoBoundary) {
  EXPECT_TRUE(boundary_offsets("no punctuation here").empty());
}

TEST(DetectBoundaries, QuestionAndExclamation) {
  EXPECT_EQ(boundary_offsets("Why? Because! Done."), (std::vector<std::size_t>{5, 14}));
}

TEST(DetectBoundaries, PunctuationWithoutWhitespaceIsNotABoundary) {
  EXPECT_TRUE(boundary_offsets("Version 3.14 is out").empty());
  EXPECT_TRUE(boundary_offsets("see example.com now").empty());
}

TEST(DetectBoundaries, SkipsCommonAbbreviations) {
  EXPECT_EQ(boundary_offsets("Use tools, e.g. a hammer. Then stop."),
            (std::vector<std::size_t>{26}));
}

TEST(DetectBoundaries, ClosingQuoteStaysWithSentence) {
  const std::string text = "He said \"stop.\" Then left.";
  EXPECT_EQ(boundary_offsets(text), (std::vector<std::size_t>{16}));
}

TEST(DetectBoundaries, BlankLineAndListItems) {
  const std::string text = "Steps:\n- first\n- second\n\nDone";
  const auto bs = boundary_offsets(text);
  // "- first" starts at 7, "- second" at 15, "Done" after the blank line at 25.
  EXPECT_EQ(bs, (std::vector<std::size_t>{7, 15, 25}));
}

TEST(DetectBoundaries, NumberedListMarkerIsNotASentenceEnd) {
  const std::string text = "Plan:\n1. Rest well\n2. Eat well";
  EXPECT_EQ(boundary_offsets(text), (std::vector<std::size_t>{6, 19}));
}

TEST(DetectBoundaries, NewlineAfterSentenceCutsAtNextLine) {
  const std::string text = "First line.\n  indented second.";
  EXPECT_EQ(boundary_offsets(text), (std::vector<std::size_t>{12}));
}

TEST(DetectBoundaries, CodeStatementsRespectBrackets) {
  const std::string code = "x = [1,\n2]\ny = 3\n";
  const std::string text = "```\n" + code + "```";
  const auto bs = aj::detect_boundaries(AnswerText(text));
  const std::size_t interior = 4;
  std::vector<std::size_t> code_cuts;
  for (const auto& b : bs) {
    if (b.kind == BoundaryKind::kCodeStatementEnd) code_cuts.push_back(b.offset - interior);
  }
  EXPECT_EQ(code_cuts, (std::vector<std::size_t>{code.find("y = 3")}));
}

TEST(DetectBoundaries, NoCutInsideStringLiteral) {
  const std::string text = "```\ns = \"a ( b\"\nu = \"\"\"x\n(\n\"\"\"\nt = 1\n```";
  for (const auto& b : aj::detect_boundaries(AnswerText(text))) {
    if (b.kind != BoundaryKind::kCodeStatementEnd) continue;
    const std::string head = text.substr(b.offset, 5);
    EXPECT_TRUE(head == "t = 1" || head == "u = \"") << b.offset;
  }
}

TEST(DetectBoundaries, FencesAreBlockBoundaries) {
  const std::string text = "Look:\n```\na = 1\nb = 2\n```\nAfter.";
  const auto bs = aj::detect_boundaries(AnswerText(text));
  std::vector<std::size_t> blocks;
  for (const auto& b : bs) {
    if (b.kind == BoundaryKind::kBlockBoundary) blocks.push_back(b.offset);
  }
  EXPECT_EQ(blocks, (std::vector<std::size_t>{6, text.find("After.")}));
}

TEST(DetectBoundaries, InvariantsHoldOnGeneratedAnswers) {
  aj::testing::Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const AnswerText answer(aj::testing::random_answer(rng));
    const auto bs = aj::detect_boundaries(answer);
    std::size_t prev = 0;
    for (const auto& b : bs) {
      ASSERT_GT(b.offset, prev) << answer.raw();
      ASSERT_LT(b.offset, answer.size());
      ASSERT_TRUE(aj::text::is_char_boundary(answer.raw(), b.offset));
      prev = b.offset;
    }
    EXPECT_EQ(bs, aj::detect_boundaries(answer)) << "detection must be pure";
  }
}

TEST(DetectBoundaries, CodeCutsKeepBracketsBalanced) {
  aj::testing::Rng rng(21);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const AnswerText answer(aj::testing::random_answer(rng));
    const auto spans = answer.spans();
    for (const auto& b : aj::detect_boundaries(answer)) {
      if (b.kind != BoundaryKind::kCodeStatementEnd) continue;
      const auto span = std::find_if(spans.begin(), spans.end(), [&](const auto& s) {
        return s.kind == SpanKind::kCode && s.start < b.offset && b.offset <= s.end;
      });
      ASSERT_NE(span, spans.end());
      const std::string_view prefix(answer.raw().data() + span->start, b.offset - span->start);
      EXPECT_EQ(bracket_depth(prefix), 0) << prefix;
      ++checked;
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(SplitAt, OneCut) {
  const AnswerText answer("abc. def.");
  const std::vector<SplitPosition> cuts = {{5, BoundaryKind::kSentenceEnd}};
  EXPECT_EQ(aj::split_at(answer, cuts), (std::vector<std::string>{"abc. ", "def."}));
}

TEST(SplitAt, NoCutsIsIdentity) {
  const AnswerText answer("anything at all. really");
  EXPECT_EQ(aj::split_at(answer, {}), (std::vector<std::string>{answer.raw()}));
}

TEST(SplitAt, RejectsIllegalPositions) {
  const AnswerText answer("abc. def. ghi.");
  const std::vector<SplitPosition> off_boundary = {{2, BoundaryKind::kSentenceEnd}};
  EXPECT_THROW(aj::split_at(answer, off_boundary), std::invalid_argument);
  const std::vector<SplitPosition> unordered = {{10, BoundaryKind::kSentenceEnd},
                                                {5, BoundaryKind::kSentenceEnd}};
  EXPECT_THROW(aj::split_at(answer, unordered), std::invalid_argument);
  const std::vector<SplitPosition> repeated = {{5, BoundaryKind::kSentenceEnd},
                                               {5, BoundaryKind::kSentenceEnd}};
  EXPECT_THROW(aj::split_at(answer, repeated), std::invalid_argument);
}

TEST(SplitAt, ConcatenationReproducesInput) {
  aj::testing::Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const AnswerText answer(aj::testing::random_answer(rng));
    const auto bs = aj::detect_boundaries(answer);
    std::vector<SplitPosition> subset;
    for (const auto& b : bs) {
      if (rng.chance(40)) subset.push_back(b);
    }
    const auto segments = aj::split_at(answer, subset);
    ASSERT_EQ(segments.size(), subset.size() + 1);
    std::size_t at = 0;
    for (std::size_t j = 0; j < segments.size(); ++j) {
      ASSERT_FALSE(segments[j].empty());
      ASSERT_EQ(answer.raw().compare(at, segments[j].size(), segments[j]), 0);
      at += segments[j].size();
      if (j < subset.size()) ASSERT_EQ(at, subset[j].offset);
    }
    EXPECT_EQ(std::accumulate(segments.begin(), segments.end(), std::string()),
              answer.raw());
  }
}
