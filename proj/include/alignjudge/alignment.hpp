#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alignjudge/segmentation.hpp"

namespace alignjudge {

inline constexpr int kDefaultSegmentCount = 3;

// Normalized token set: lowercase, split on Unicode whitespace, leading and
// trailing punctuation stripped. Tokens are kept sorted and unique.
class TokenSet {
 public:
  TokenSet() = default;
  explicit TokenSet(std::string_view text);

  std::span<const std::string> tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  std::size_t intersection_size(const TokenSet& other) const;

 private:
  std::vector<std::string> tokens_;
};

// |A ∩ B| / max(|A|, |B|). Both empty scores 1; one empty scores 0.
double token_overlap_similarity(const TokenSet& a, const TokenSet& b);
double token_overlap_similarity(std::string_view a, std::string_view b);

// Pluggable segment similarity. Implementations must be pure and return
// values in [0, 1].
class SimilarityMetric {
 public:
  virtual ~SimilarityMetric() = default;
  virtual double score(std::string_view a, std::string_view b) const = 0;
};

class TokenOverlapSimilarity final : public SimilarityMetric {
 public:
  double score(std::string_view a, std::string_view b) const override {
    return token_overlap_similarity(a, b);
  }
};

class FunctionSimilarity final : public SimilarityMetric {
 public:
  using Fn = std::function<double(std::string_view, std::string_view)>;
  explicit FunctionSimilarity(Fn fn) : fn_(std::move(fn)) {}
  double score(std::string_view a, std::string_view b) const override {
    return fn_(a, b);
  }

 private:
  Fn fn_;
};

struct EqualSplit {
  std::vector<SplitPosition> cuts;
  int effective_k = 1;
};

// Length alignment for one answer. For each target i * chars / k (i in
// 1..k-1, measured in code points) picks the nearest unused boundary,
// earlier on ties. With fewer than k-1 boundaries every boundary is returned
// and effective_k drops to |boundaries| + 1. Cuts come back sorted.
EqualSplit equal_split(const AnswerText& answer,
                       std::span<const SplitPosition> boundaries, int k);

// Walks every size-(k-1) subset of `boundaries` in lexicographic order of
// boundary indices. Throws std::invalid_argument when there are fewer than
// k-1 boundaries or k < 1.
class PartitionEnumerator {
 public:
  PartitionEnumerator(std::span<const SplitPosition> boundaries, int k);

  bool done() const { return done_; }
  std::span<const std::size_t> indices() const { return indices_; }
  std::vector<SplitPosition> current() const;
  void advance();

 private:
  std::span<const SplitPosition> boundaries_;
  std::vector<std::size_t> indices_;
  bool done_ = false;
};

std::vector<std::vector<SplitPosition>> enumerate_partitions(
    std::span<const SplitPosition> boundaries, int k);

// Exact C(n, r); throws std::overflow_error past 64 bits.
std::uint64_t binomial(std::uint64_t n, std::uint64_t r);

// C(p1, k-1) * C(p2, k-1): cut pairs visited by the semantic search.
std::uint64_t partition_count(std::uint64_t p1, std::uint64_t p2, int k);

// Segment count both answers can support: min(k, p1 + 1, p2 + 1).
int effective_k(std::size_t p1, std::size_t p2, int k);

enum class AlignmentStrategy { kLength, kSemantic };

struct SplitPlan {
  int k = 1;
  int requested_k = 1;
  std::vector<SplitPosition> cuts_first;
  std::vector<SplitPosition> cuts_second;
  AlignmentStrategy strategy = AlignmentStrategy::kLength;
  std::optional<double> score;  // semantic only
  std::uint64_t visited_pairs = 0;
  bool thinned = false;
};

struct AlignmentOptions {
  // Above this many cut pairs, boundaries are thinned before searching.
  std::uint64_t max_pairs = 1'000'000;
  // Boundaries kept per answer when thinning, nearest the equal-split targets.
  std::size_t thinned_boundaries = 30;
};

// Equal-split both answers at the common effective k.
SplitPlan length_alignment(const AnswerText& first,
                           std::span<const SplitPosition> first_boundaries,
                           const AnswerText& second,
                           std::span<const SplitPosition> second_boundaries,
                           int k);

// Exhaustive search over C(p1,k-1) * C(p2,k-1) cut pairs maximizing the sum
// of per-segment similarities. The first answer's combination is the outer
// loop and only strictly greater scores replace the incumbent, so ties go to
// the first maximum in enumeration order.
SplitPlan best_semantic_alignment(
    const AnswerText& first, std::span<const SplitPosition> first_boundaries,
    const AnswerText& second, std::span<const SplitPosition> second_boundaries,
    int k, const SimilarityMetric& similarity,
    const AlignmentOptions& options = {});

double cumulative_similarity(const AnswerText& first,
                             std::span<const SplitPosition> first_cuts,
                             const AnswerText& second,
                             std::span<const SplitPosition> second_cuts,
                             const SimilarityMetric& similarity);

}  // namespace alignjudge
