#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rng.hpp"

namespace pooled {

using AgentIndex = std::uint32_t;

enum class RegimeKind { Sublinear, Linear, Explicit };

// How k was chosen. Only metadata: ProblemConfig::k is authoritative.
struct Regime {
  RegimeKind kind = RegimeKind::Explicit;
  double param = 0.0;  // theta for Sublinear, zeta for Linear

  static Regime sublinear(double theta) { return {RegimeKind::Sublinear, theta}; }
  static Regime linear(double zeta) { return {RegimeKind::Linear, zeta}; }

  // round(n^theta) or round(zeta * n); Explicit has no derivation.
  std::uint64_t derive_k(std::uint64_t n) const;
  // "sublinear(0.25)", "linear(0.1)" or "explicit".
  std::string describe() const;
};

std::uint64_t default_query_size(std::uint64_t n);

struct ProblemConfig {
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  std::uint64_t m = 0;
  std::uint64_t gamma = 0;
  Regime regime;

  // Fills k from the regime and gamma = floor(n/2) (at least 1).
  static ProblemConfig from_regime(std::uint64_t n, Regime regime, std::uint64_t m);

  void validate() const;
};

class GroundTruth {
 public:
  GroundTruth() = default;
  explicit GroundTruth(std::vector<std::uint8_t> bits);

  std::size_t size() const { return bits_.size(); }
  std::uint64_t weight() const { return weight_; }
  bool is_one(AgentIndex i) const { return bits_[i] != 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;

 private:
  std::vector<std::uint8_t> bits_;
  std::uint64_t weight_ = 0;
};

GroundTruth sample_ground_truth(const ProblemConfig& config, RngHandle rng);
// Same, drawing from an already-running generator.
GroundTruth sample_ground_truth(const ProblemConfig& config, Rng& rng);

// Bipartite multigraph of m queries x n agents. Each query keeps its ordered
// list of Gamma draws; the distinct neighbourhoods and degrees are derived
// once at construction. Immutable afterwards.
class PoolingGraph {
 public:
  PoolingGraph() = default;

  // `draws` holds m * gamma agent indices, query-major.
  PoolingGraph(std::uint64_t n, std::uint64_t gamma, std::vector<AgentIndex> draws);

  static PoolingGraph from_queries(std::uint64_t n, std::uint64_t gamma,
                                   const std::vector<std::vector<AgentIndex>>& queries);

  std::uint64_t agents() const { return n_; }
  std::uint64_t queries() const { return m_; }
  std::uint64_t query_size() const { return gamma_; }

  std::span<const AgentIndex> draws(std::size_t query) const {
    return {draws_.data() + query * gamma_, gamma_};
  }
  std::span<const AgentIndex> all_draws() const { return draws_; }
  // Distinct agents of a query in order of first appearance.
  std::span<const AgentIndex> distinct_agents(std::size_t query) const {
    return {query_distinct_.data() + query_offsets_[query],
            query_offsets_[query + 1] - query_offsets_[query]};
  }
  // Sorted distinct query indices containing the agent.
  std::span<const std::uint32_t> membership(AgentIndex agent) const {
    return {membership_.data() + membership_offsets_[agent],
            membership_offsets_[agent + 1] - membership_offsets_[agent]};
  }

  std::span<const std::uint32_t> multi_degree() const { return multi_degree_; }
  std::span<const std::uint32_t> distinct_degree() const { return distinct_degree_; }

  // Graph restricted to the first `m` queries.
  PoolingGraph prefix(std::uint64_t m) const;

  // Header "n m gamma", then one line per query with its draws (0-based).
  void write_text(std::ostream& out) const;
  static PoolingGraph read_text(std::istream& in);

  friend bool operator==(const PoolingGraph& a, const PoolingGraph& b) {
    return a.n_ == b.n_ && a.gamma_ == b.gamma_ && a.draws_ == b.draws_;
  }

 private:
  std::uint64_t n_ = 0;
  std::uint64_t m_ = 0;
  std::uint64_t gamma_ = 0;
  std::vector<AgentIndex> draws_;
  std::vector<std::size_t> query_offsets_{0};
  std::vector<AgentIndex> query_distinct_;
  std::vector<std::uint32_t> multi_degree_;
  std::vector<std::uint32_t> distinct_degree_;
  std::vector<std::size_t> membership_offsets_;
  std::vector<std::uint32_t> membership_;
};

PoolingGraph sample_pooling_graph(const ProblemConfig& config, RngHandle rng);
PoolingGraph sample_pooling_graph(const ProblemConfig& config, Rng& rng);

// Appends one query of `gamma` uniform draws with replacement.
void sample_query_draws(std::uint64_t n, std::uint64_t gamma, Rng& rng, std::vector<AgentIndex>& out);

struct DegreeSummary {
  double mean_multi = 0.0;
  double mean_distinct = 0.0;
  std::uint32_t min_multi = 0;
  std::uint32_t max_multi = 0;
  std::uint32_t min_distinct = 0;
  std::uint32_t max_distinct = 0;
  // Mean of distinct/multi over agents with at least one draw.
  double mean_ratio = 0.0;
};

DegreeSummary degree_summary(const PoolingGraph& graph);

}  // namespace pooled
