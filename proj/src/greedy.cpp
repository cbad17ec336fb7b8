#include "greedy.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>

#include "error.hpp"

namespace pooled {

std::vector<double> neighborhood_sums(const PoolingGraph& graph, const QueryResults& results) {
  require(results.values.size() == graph.queries(), ErrorCode::InvalidInput,
          "expected " + std::to_string(graph.queries()) + " query results, got " +
              std::to_string(results.values.size()));
  std::vector<double> psi(graph.agents(), 0.0);
  for (std::uint64_t j = 0; j < graph.queries(); ++j) {
    const double value = results.values[j];
    for (AgentIndex agent : graph.distinct_agents(j)) psi[agent] += value;
  }
  return psi;
}

ScoreTable compute_scores(std::vector<double> psi, const PoolingGraph& graph, std::uint64_t k) {
  require(psi.size() == graph.agents(), ErrorCode::InvalidInput, "psi length does not match the graph");
  ScoreTable table;
  const auto degrees = graph.distinct_degree();
  table.distinct_degree.assign(degrees.begin(), degrees.end());
  table.score.resize(psi.size());
  const double half_k = static_cast<double>(k) / 2.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    table.score[i] = psi[i] - static_cast<double>(table.distinct_degree[i]) * half_k;
  }
  table.psi = std::move(psi);
  return table;
}

std::uint64_t bitonic_comparator_count(std::uint64_t width) {
  if (width < 2) return 0;
  const auto levels = static_cast<std::uint64_t>(std::countr_zero(width));
  return width / 2 * levels * (levels + 1) / 2;
}

BitonicOutcome bitonic_sort(std::span<const ScoreKey> keys) {
  const std::size_t width = std::bit_ceil(std::max<std::size_t>(keys.size(), 1));
  std::vector<ScoreKey> lines(keys.begin(), keys.end());
  lines.resize(width, ScoreKey{-std::numeric_limits<double>::infinity(), std::numeric_limits<AgentIndex>::max()});

  BitonicOutcome outcome;
  for (std::size_t block = 2; block <= width; block <<= 1) {
    for (std::size_t stride = block >> 1; stride > 0; stride >>= 1) {
      for (std::size_t i = 0; i < width; ++i) {
        const std::size_t partner = i ^ stride;
        if (partner <= i) continue;
        ++outcome.comparators;
        // Blocks with (i & block) == 0 end up in network order, the rest reversed.
        const bool forward = (i & block) == 0;
        if (forward == ranks_before(lines[partner], lines[i])) std::swap(lines[i], lines[partner]);
      }
    }
  }
  outcome.permutation.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) outcome.permutation.push_back(lines[i].index);
  return outcome;
}

Estimate rank_and_declare(const ScoreTable& scores, std::uint64_t k, SortMethod method) {
  const std::size_t n = scores.score.size();
  require(k <= n, ErrorCode::InvalidInput, "k exceeds the number of agents");
  Estimate estimate;
  if (method == SortMethod::Bitonic) {
    std::vector<ScoreKey> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = {scores.score[i], static_cast<AgentIndex>(i)};
    estimate.ranking = bitonic_sort(keys).permutation;
  } else {
    estimate.ranking.resize(n);
    std::iota(estimate.ranking.begin(), estimate.ranking.end(), AgentIndex{0});
    std::sort(estimate.ranking.begin(), estimate.ranking.end(), [&](AgentIndex a, AgentIndex b) {
      return ranks_before({scores.score[a], a}, {scores.score[b], b});
    });
  }
  estimate.bits.assign(n, 0);
  for (std::uint64_t r = 0; r < k; ++r) estimate.bits[estimate.ranking[r]] = 1;
  if (k == 0 || k == n) {
    estimate.separation_margin = std::numeric_limits<double>::infinity();
  } else {
    estimate.separation_margin = scores.score[estimate.ranking[k - 1]] - scores.score[estimate.ranking[k]];
  }
  return estimate;
}

Evaluation evaluate(const Estimate& estimate, const GroundTruth& truth) {
  require(estimate.bits.size() == truth.size(), ErrorCode::InvalidInput, "estimate and truth differ in length");
  Evaluation result;
  std::uint64_t hits = 0;
  bool exact = true;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool declared = estimate.bits[i] != 0;
    if (declared != truth.is_one(static_cast<AgentIndex>(i))) exact = false;
    if (declared && truth.is_one(static_cast<AgentIndex>(i))) ++hits;
  }
  result.exact = exact;
  result.overlap = truth.weight() == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(truth.weight());
  return result;
}

Estimate greedy_reconstruct(const PoolingGraph& graph, const QueryResults& results, std::uint64_t k,
                            SortMethod method) {
  return rank_and_declare(compute_scores(neighborhood_sums(graph, results), graph, k), k, method);
}

IncrementalScores::IncrementalScores(std::uint64_t n, std::uint64_t k)
    : k_(k), psi_(n, 0.0), distinct_degree_(n, 0), stamp_(n, std::numeric_limits<std::uint32_t>::max()) {}

void IncrementalScores::add_query(std::span<const AgentIndex> draws, double result) {
  const auto id = static_cast<std::uint32_t>(queries_);
  for (AgentIndex agent : draws) {
    if (stamp_[agent] == id) continue;
    stamp_[agent] = id;
    psi_[agent] += result;
    ++distinct_degree_[agent];
  }
  ++queries_;
}

bool IncrementalScores::separates(const GroundTruth& truth) const {
  double lowest_one = std::numeric_limits<double>::infinity();
  double highest_zero = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < psi_.size(); ++i) {
    const double s = score(static_cast<AgentIndex>(i));
    if (truth.is_one(static_cast<AgentIndex>(i))) {
      lowest_one = std::min(lowest_one, s);
    } else {
      highest_zero = std::max(highest_zero, s);
    }
  }
  return lowest_one > highest_zero;
}

ScoreTable IncrementalScores::table() const {
  ScoreTable table;
  table.psi = psi_;
  table.distinct_degree = distinct_degree_;
  table.score.resize(psi_.size());
  for (std::size_t i = 0; i < psi_.size(); ++i) table.score[i] = score(static_cast<AgentIndex>(i));
  return table;
}

}  // namespace pooled
