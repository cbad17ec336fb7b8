#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "model.hpp"
#include "noise.hpp"

namespace pooled {

struct ScoreTable {
  std::vector<double> psi;
  std::vector<std::uint32_t> distinct_degree;
  std::vector<double> score;  // psi - distinct_degree * k / 2
};

struct Estimate {
  std::vector<std::uint8_t> bits;
  std::vector<AgentIndex> ranking;  // descending score, ties by ascending index
  double separation_margin = 0.0;   // +inf when k == 0 or k == n
};

enum class SortMethod { Comparison, Bitonic };

struct Evaluation {
  bool exact = false;
  double overlap = 0.0;
};

// Each query result is added once to every distinct agent of the query,
// visiting queries in index order.
std::vector<double> neighborhood_sums(const PoolingGraph& graph, const QueryResults& results);

ScoreTable compute_scores(std::vector<double> psi, const PoolingGraph& graph, std::uint64_t k);

Estimate rank_and_declare(const ScoreTable& scores, std::uint64_t k, SortMethod method = SortMethod::Comparison);

struct ScoreKey {
  double score;
  AgentIndex index;
};

// (score desc, index asc)
inline bool ranks_before(const ScoreKey& a, const ScoreKey& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.index < b.index;
}

struct BitonicOutcome {
  std::vector<AgentIndex> permutation;
  std::uint64_t comparators = 0;
};

// Batcher's bitonic sorter over the keys, padded to the next power of two
// with keys that rank after every real key.
BitonicOutcome bitonic_sort(std::span<const ScoreKey> keys);

// Comparator count of a bitonic network on `width` (a power of two) lines.
std::uint64_t bitonic_comparator_count(std::uint64_t width);

Evaluation evaluate(const Estimate& estimate, const GroundTruth& truth);

// Whole pipeline of the greedy reconstruction on a measured instance.
Estimate greedy_reconstruct(const PoolingGraph& graph, const QueryResults& results, std::uint64_t k,
                            SortMethod method = SortMethod::Comparison);

// Streaming version of the first phase: queries are folded in one at a time,
// as the simulated network receives them.
class IncrementalScores {
 public:
  IncrementalScores(std::uint64_t n, std::uint64_t k);

  void add_query(std::span<const AgentIndex> draws, double result);

  std::uint64_t queries() const { return queries_; }
  std::span<const double> psi() const { return psi_; }
  std::span<const std::uint32_t> distinct_degree() const { return distinct_degree_; }

  double score(AgentIndex i) const {
    return psi_[i] - static_cast<double>(distinct_degree_[i]) * (static_cast<double>(k_) / 2.0);
  }

  // True iff every one-agent scores strictly above every zero-agent, which is
  // exact recovery with a positive separation margin.
  bool separates(const GroundTruth& truth) const;

  ScoreTable table() const;

 private:
  std::uint64_t k_;
  std::uint64_t queries_ = 0;
  std::vector<double> psi_;
  std::vector<std::uint32_t> distinct_degree_;
  std::vector<std::uint32_t> stamp_;
};

}  // namespace pooled
