#include "alignjudge/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "alignjudge/text_util.hpp"

namespace alignjudge {

namespace {

// Strips leading and trailing punctuation code points from a token.
std::string_view strip_punctuation(std::string_view token) {
  std::size_t b = 0;
  while (b < token.size()) {
    std::size_t next = b;
    if (!text::is_punctuation(text::decode_next(token, next))) break;
    b = next;
  }
  std::size_t e = token.size();
  while (e > b) {
    std::size_t start = e - 1;
    while (start > b && !text::is_char_boundary(token, start)) --start;
    std::size_t probe = start;
    if (!text::is_punctuation(text::decode_next(token, probe))) break;
    e = start;
  }
  return token.substr(b, e - b);
}

// Offsets 0, cuts..., size as a segment-edge list.
std::vector<std::size_t> segment_edges(const AnswerText& answer,
                                       std::span<const SplitPosition> cuts) {
  std::vector<std::size_t> edges;
  edges.reserve(cuts.size() + 2);
  edges.push_back(0);
  for (const SplitPosition& c : cuts) edges.push_back(c.offset);
  edges.push_back(answer.size());
  return edges;
}

std::vector<double> equal_split_targets(const AnswerText& answer, int k) {
  const double chars =
      static_cast<double>(text::code_point_count(answer.raw()));
  std::vector<double> targets;
  for (int i = 1; i < k; ++i) targets.push_back(i * chars / k);
  return targets;
}

// Keeps the `keep` boundaries nearest any equal-split target, always
// retaining `must_keep`. Order of the result follows the input.
std::vector<SplitPosition> thin_boundaries(
    const AnswerText& answer, std::span<const SplitPosition> boundaries,
    std::span<const SplitPosition> must_keep, int k, std::size_t keep) {
  if (boundaries.size() <= keep) {
    return {boundaries.begin(), boundaries.end()};
  }
  const std::vector<double> targets = equal_split_targets(answer, k);
  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(boundaries.size());
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    const double pos = static_cast<double>(
        text::code_point_index(answer.raw(), boundaries[i].offset));
    double best = std::numeric_limits<double>::infinity();
    for (double t : targets) best = std::min(best, std::abs(pos - t));
    const bool forced = std::find(must_keep.begin(), must_keep.end(),
                                  boundaries[i]) != must_keep.end();
    ranked.emplace_back(forced ? -1.0 : best, i);
  }
  std::stable_sort(ranked.begin(), ranked.end());
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < keep && i < ranked.size(); ++i) {
    chosen.push_back(ranked[i].second);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<SplitPosition> out;
  for (std::size_t i : chosen) out.push_back(boundaries[i]);
  return out;
}

// Similarity between segment [a0,a1) of the first answer and [b0,b1) of the
// second, memoized per interval pair. Token sets are cached per interval when
// the metric is the built-in token overlap.
class SegmentScorer {
 public:
  SegmentScorer(const AnswerText& first, std::span<const SplitPosition> b1,
                const AnswerText& second, std::span<const SplitPosition> b2,
                const SimilarityMetric& metric)
      : first_(first),
        second_(second),
        metric_(metric),
        overlap_(dynamic_cast<const TokenOverlapSimilarity*>(&metric) !=
                 nullptr) {
    edges1_ = segment_edges(first, b1);
    edges2_ = segment_edges(second, b2);
  }

  // Edge indices into [0, boundaries..., size].
  double score(std::size_t a0, std::size_t a1, std::size_t b0,
               std::size_t b1) {
    const std::uint64_t n1 = edges1_.size();
    const std::uint64_t n2 = edges2_.size();
    const std::uint64_t key = ((a0 * n1 + a1) * n2 + b0) * n2 + b1;
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    double s = 0.0;
    if (overlap_) {
      s = token_overlap_similarity(tokens(first_, edges1_, sets1_, a0, a1),
                                   tokens(second_, edges2_, sets2_, b0, b1));
    } else {
      s = metric_.score(slice(first_, edges1_, a0, a1),
                        slice(second_, edges2_, b0, b1));
    }
    memo_.emplace(key, s);
    return s;
  }

 private:
  static std::string_view slice(const AnswerText& a,
                                const std::vector<std::size_t>& edges,
                                std::size_t i, std::size_t j) {
    return std::string_view(a.raw()).substr(edges[i], edges[j] - edges[i]);
  }

  static const TokenSet& tokens(
      const AnswerText& a, const std::vector<std::size_t>& edges,
      std::unordered_map<std::uint64_t, TokenSet>& cache, std::size_t i,
      std::size_t j) {
    const std::uint64_t key = i * edges.size() + j;
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(key, TokenSet(slice(a, edges, i, j))).first;
    }
    return it->second;
  }

  const AnswerText& first_;
  const AnswerText& second_;
  const SimilarityMetric& metric_;
  bool overlap_;
  std::vector<std::size_t> edges1_;
  std::vector<std::size_t> edges2_;
  std::unordered_map<std::uint64_t, double> memo_;
  std::unordered_map<std::uint64_t, TokenSet> sets1_;
  std::unordered_map<std::uint64_t, TokenSet> sets2_;
};

std::vector<std::vector<std::size_t>> all_index_combinations(std::size_t n,
                                                              int k) {
  std::vector<SplitPosition> dummy(n);
  std::vector<std::vector<std::size_t>> out;
  for (PartitionEnumerator e(dummy, k); !e.done(); e.advance()) {
    out.emplace_back(e.indices().begin(), e.indices().end());
  }
  return out;
}

}  // namespace

TokenSet::TokenSet(std::string_view text) {
  std::size_t i = 0;
  std::size_t word_start = 0;
  bool in_word = false;
  auto flush = [&](std::size_t end) {
    const std::string_view token =
        strip_punctuation(text.substr(word_start, end - word_start));
    if (!token.empty()) tokens_.push_back(text::ascii_lower(token));
  };
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = text::decode_next(text, i);
    if (text::is_unicode_space(cp)) {
      if (in_word) flush(start);
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      word_start = start;
    }
  }
  if (in_word) flush(text.size());
  std::sort(tokens_.begin(), tokens_.end());
  tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
}

std::size_t TokenSet::intersection_size(const TokenSet& other) const {
  std::size_t count = 0;
  auto a = tokens_.begin();
  auto b = other.tokens_.begin();
  while (a != tokens_.end() && b != other.tokens_.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++count;
      ++a;
      ++b;
    }
  }
  return count;
}

double token_overlap_similarity(const TokenSet& a, const TokenSet& b) {
  const std::size_t denom = std::max(a.size(), b.size());
  if (denom == 0) return 1.0;
  return static_cast<double>(a.intersection_size(b)) /
         static_cast<double>(denom);
}

double token_overlap_similarity(std::string_view a, std::string_view b) {
  return token_overlap_similarity(TokenSet(a), TokenSet(b));
}

EqualSplit equal_split(const AnswerText& answer,
                       std::span<const SplitPosition> boundaries, int k) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  EqualSplit result;
  if (boundaries.size() < static_cast<std::size_t>(k - 1)) {
    result.cuts.assign(boundaries.begin(), boundaries.end());
    result.effective_k = static_cast<int>(boundaries.size()) + 1;
    return result;
  }
  result.effective_k = k;
  std::vector<double> positions;
  positions.reserve(boundaries.size());
  for (const SplitPosition& b : boundaries) {
    positions.push_back(
        static_cast<double>(text::code_point_index(answer.raw(), b.offset)));
  }
  std::vector<bool> used(boundaries.size(), false);
  for (double target : equal_split_targets(answer, k)) {
    std::size_t best = boundaries.size();
    double best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < boundaries.size(); ++i) {
      if (used[i]) continue;
      const double d = std::abs(positions[i] - target);
      if (d < best_distance) {  // strict: earlier boundary wins ties
        best_distance = d;
        best = i;
      }
    }
    used[best] = true;
    result.cuts.push_back(boundaries[best]);
  }
  std::sort(result.cuts.begin(), result.cuts.end());
  return result;
}

PartitionEnumerator::PartitionEnumerator(
    std::span<const SplitPosition> boundaries, int k)
    : boundaries_(boundaries) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const auto r = static_cast<std::size_t>(k - 1);
  if (boundaries.size() < r) {
    throw std::invalid_argument("need at least k-1 boundaries to partition");
  }
  indices_.resize(r);
  std::iota(indices_.begin(), indices_.end(), std::size_t{0});
}

std::vector<SplitPosition> PartitionEnumerator::current() const {
  std::vector<SplitPosition> out;
  out.reserve(indices_.size());
  for (std::size_t i : indices_) out.push_back(boundaries_[i]);
  return out;
}

void PartitionEnumerator::advance() {
  if (done_) return;
  const std::size_t n = boundaries_.size();
  const std::size_t r = indices_.size();
  // Rightmost index that can still move right.
  std::size_t i = r;
  while (i > 0 && indices_[i - 1] == n - r + (i - 1)) --i;
  if (i == 0) {
    done_ = true;
    return;
  }
  ++indices_[i - 1];
  for (std::size_t j = i; j < r; ++j) indices_[j] = indices_[j - 1] + 1;
}

std::vector<std::vector<SplitPosition>> enumerate_partitions(
    std::span<const SplitPosition> boundaries, int k) {
  std::vector<std::vector<SplitPosition>> out;
  for (PartitionEnumerator e(boundaries, k); !e.done(); e.advance()) {
    out.push_back(e.current());
  }
  return out;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    // acc * (n - r + i) / i stays integral at every step.
    acc = acc * (n - r + i) / i;
    if (acc > std::numeric_limits<std::uint64_t>::max()) {
      throw std::overflow_error("binomial coefficient exceeds 64 bits");
    }
  }
  return static_cast<std::uint64_t>(acc);
}

std::uint64_t partition_count(std::uint64_t p1, std::uint64_t p2, int k) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const auto r = static_cast<std::uint64_t>(k - 1);
  const unsigned __int128 product =
      static_cast<unsigned __int128>(binomial(p1, r)) * binomial(p2, r);
  if (product > std::numeric_limits<std::uint64_t>::max()) {
    throw std::overflow_error("partition count exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(product);
}

int effective_k(std::size_t p1, std::size_t p2, int k) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const std::size_t limit = std::min(p1, p2) + 1;
  return static_cast<int>(std::min(static_cast<std::size_t>(k), limit));
}

SplitPlan length_alignment(const AnswerText& first,
                           std::span<const SplitPosition> first_boundaries,
                           const AnswerText& second,
                           std::span<const SplitPosition> second_boundaries,
                           int k) {
  SplitPlan plan;
  plan.requested_k = k;
  plan.k = effective_k(first_boundaries.size(), second_boundaries.size(), k);
  plan.strategy = AlignmentStrategy::kLength;
  plan.cuts_first = equal_split(first, first_boundaries, plan.k).cuts;
  plan.cuts_second = equal_split(second, second_boundaries, plan.k).cuts;
  return plan;
}

SplitPlan best_semantic_alignment(
    const AnswerText& first, std::span<const SplitPosition> first_boundaries,
    const AnswerText& second, std::span<const SplitPosition> second_boundaries,
    int k, const SimilarityMetric& similarity,
    const AlignmentOptions& options) {
  SplitPlan plan;
  plan.requested_k = k;
  plan.strategy = AlignmentStrategy::kSemantic;
  plan.k = effective_k(first_boundaries.size(), second_boundaries.size(), k);

  std::vector<SplitPosition> b1(first_boundaries.begin(),
                                first_boundaries.end());
  std::vector<SplitPosition> b2(second_boundaries.begin(),
                                second_boundaries.end());
  if (partition_count(b1.size(), b2.size(), plan.k) > options.max_pairs) {
    plan.thinned = true;
    const auto keep1 = equal_split(first, b1, plan.k).cuts;
    const auto keep2 = equal_split(second, b2, plan.k).cuts;
    std::size_t n1 = std::min(b1.size(), options.thinned_boundaries);
    std::size_t n2 = std::min(b2.size(), options.thinned_boundaries);
    const auto floor = static_cast<std::size_t>(plan.k - 1);
    // Shrink the larger side until the search fits under the cap.
    while (partition_count(n1, n2, plan.k) > options.max_pairs &&
           std::max(n1, n2) > floor) {
      if (n1 >= n2) {
        --n1;
      } else {
        --n2;
      }
    }
    b1 = thin_boundaries(first, b1, keep1, plan.k, n1);
    b2 = thin_boundaries(second, b2, keep2, plan.k, n2);
  }

  SegmentScorer scorer(first, b1, second, b2, similarity);
  const auto combos1 = all_index_combinations(b1.size(), plan.k);
  const auto combos2 = all_index_combinations(b2.size(), plan.k);
  const std::size_t last1 = b1.size() + 1;
  const std::size_t last2 = b2.size() + 1;

  bool have_best = false;
  double best_score = 0.0;
  std::size_t best1 = 0;
  std::size_t best2 = 0;
  for (std::size_t i = 0; i < combos1.size(); ++i) {
    const auto& c1 = combos1[i];
    for (std::size_t j = 0; j < combos2.size(); ++j) {
      const auto& c2 = combos2[j];
      double total = 0.0;
      std::size_t prev1 = 0;
      std::size_t prev2 = 0;
      for (std::size_t s = 0; s < c1.size(); ++s) {
        // Boundary index b maps to edge index b + 1.
        total += scorer.score(prev1, c1[s] + 1, prev2, c2[s] + 1);
        prev1 = c1[s] + 1;
        prev2 = c2[s] + 1;
      }
      total += scorer.score(prev1, last1, prev2, last2);
      ++plan.visited_pairs;
      if (!have_best || total > best_score) {
        have_best = true;
        best_score = total;
        best1 = i;
        best2 = j;
      }
    }
  }
  for (std::size_t idx : combos1[best1]) plan.cuts_first.push_back(b1[idx]);
  for (std::size_t idx : combos2[best2]) plan.cuts_second.push_back(b2[idx]);
  plan.score = best_score;
  return plan;
}

double cumulative_similarity(const AnswerText& first,
                             std::span<const SplitPosition> first_cuts,
                             const AnswerText& second,
                             std::span<const SplitPosition> second_cuts,
                             const SimilarityMetric& similarity) {
  if (first_cuts.size() != second_cuts.size()) {
    throw std::invalid_argument("cut lists must produce equal segment counts");
  }
  const auto e1 = segment_edges(first, first_cuts);
  const auto e2 = segment_edges(second, second_cuts);
  const std::string_view r1 = first.raw();
  const std::string_view r2 = second.raw();
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < e1.size(); ++s) {
    total += similarity.score(r1.substr(e1[s], e1[s + 1] - e1[s]),
                              r2.substr(e2[s], e2[s + 1] - e2[s]));
  }
  return total;
}

}  // namespace alignjudge
