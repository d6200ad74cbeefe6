#pragma once

#include <string>
#include <vector>

#include "alignjudge/harness.hpp"
#include "alignjudge/mock_judges.hpp"
#include "support/generators.hpp"

namespace alignjudge::testing {

// Three-sentence answers over nine distinct words each. `shared` words of
// an answer come from the question's nine-word reference, so its quality
// under token overlap is shared / 9 and the pair's quality gap is set by
// construction.
struct SyntheticCorpus {
  std::vector<EvaluationTask> tasks;
  std::map<std::string, std::string> references;  // question -> reference
};

inline std::string word(const char* prefix, std::size_t item, std::size_t j) {
  return std::string(prefix) + std::to_string(item) + "x" + std::to_string(j);
}

inline std::string three_sentences(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += i % 3 == 0 ? ". " : " ";
    out += words[i];
  }
  return out + ".";
}

// Quality gaps cycle through three bands: 3 in 10 pairs differ completely
// (9 vs 0 shared words), 6 in 10 differ by 4 to 7 words, 1 in 10 differs by
// one word. Which answer is better alternates pseudo-randomly.
inline SyntheticCorpus recency_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  SyntheticCorpus c;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t hi = 9;
    std::size_t lo = 0;
    const std::size_t band = i % 10;
    if (band >= 3 && band <= 8) {
      lo = rng.below(3);
      hi = lo + 4 + rng.below(4);
    } else if (band == 9) {
      lo = 3 + rng.below(3);
      hi = lo + 1;
    }
    std::vector<std::string> reference;
    for (std::size_t j = 0; j < 9; ++j) reference.push_back(word("r", i, j));
    auto answer = [&](std::size_t shared, const char* filler) {
      std::vector<std::string> words(reference.begin(), reference.begin() + shared);
      for (std::size_t j = shared; j < 9; ++j) words.push_back(word(filler, i, j));
      for (std::size_t j = words.size(); j > 1; --j) std::swap(words[j - 1], words[rng.below(j)]);
      return three_sentences(words);
    };
    std::string better = answer(hi, "a");
    std::string worse = answer(lo, "b");
    if (rng.chance(50)) std::swap(better, worse);

    EvaluationTask t;
    t.question = {"s" + std::to_string(i), band < 3 ? "wide" : band < 9 ? "medium" : "narrow",
                  "Synthetic question " + std::to_string(i) + "?"};
    t.model_a = "gen_a";
    t.model_b = "gen_b";
    t.answer_a = better;
    t.answer_b = worse;
    t.k = 3;
    t.task_id = make_task_id(t.question.id, t.model_a, t.model_b, t.form);
    c.references[t.question.text] = three_sentences(reference);
    c.tasks.push_back(std::move(t));
  }
  return c;
}

inline MockJudgeSpec corpus_mock(const SyntheticCorpus& c, MockKind kind) {
  MockJudgeSpec spec;
  spec.kind = kind;
  spec.judge_id = std::string(to_string(kind));
  spec.references = c.references;
  return spec;
}

}  // namespace alignjudge::testing
