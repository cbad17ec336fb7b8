#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "error.hpp"

namespace pooled {

std::uint64_t Regime::derive_k(std::uint64_t n) const {
  switch (kind) {
    case RegimeKind::Sublinear:
      return static_cast<std::uint64_t>(std::llround(std::pow(static_cast<double>(n), param)));
    case RegimeKind::Linear:
      return static_cast<std::uint64_t>(std::llround(param * static_cast<double>(n)));
    case RegimeKind::Explicit:
      break;
  }
  fail(ErrorCode::InvalidConfig, "explicit regime carries no k derivation");
}

std::string Regime::describe() const {
  std::ostringstream out;
  switch (kind) {
    case RegimeKind::Sublinear: out << "sublinear(" << param << ")"; break;
    case RegimeKind::Linear: out << "linear(" << param << ")"; break;
    case RegimeKind::Explicit: out << "explicit"; break;
  }
  return out.str();
}

std::uint64_t default_query_size(std::uint64_t n) { return std::max<std::uint64_t>(1, n / 2); }

ProblemConfig ProblemConfig::from_regime(std::uint64_t n, Regime regime, std::uint64_t m) {
  ProblemConfig config;
  config.n = n;
  config.regime = regime;
  config.k = regime.derive_k(n);
  config.m = m;
  config.gamma = default_query_size(n);
  return config;
}

void ProblemConfig::validate() const {
  require(n >= 1, ErrorCode::InvalidConfig, "n must be positive");
  require(k <= n, ErrorCode::InvalidConfig,
          "k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
  require(gamma >= 1, ErrorCode::InvalidConfig, "query size must be positive");
  require(n <= std::numeric_limits<AgentIndex>::max(), ErrorCode::InvalidConfig, "n too large");
  require(m <= std::numeric_limits<std::uint32_t>::max(), ErrorCode::InvalidConfig, "m too large");
  if (regime.kind == RegimeKind::Sublinear) {
    require(regime.param > 0.0 && regime.param < 1.0, ErrorCode::InvalidConfig, "theta must lie in (0,1)");
  } else if (regime.kind == RegimeKind::Linear) {
    require(regime.param > 0.0 && regime.param < 1.0, ErrorCode::InvalidConfig, "zeta must lie in (0,1)");
  }
}

GroundTruth::GroundTruth(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) {
    require(b <= 1, ErrorCode::InvalidInput, "ground truth entries must be 0 or 1");
    weight_ += b;
  }
}

GroundTruth sample_ground_truth(const ProblemConfig& config, Rng& rng) {
  config.validate();
  // Partial Fisher-Yates over the agent indices.
  std::vector<AgentIndex> order(config.n);
  std::iota(order.begin(), order.end(), AgentIndex{0});
  std::vector<std::uint8_t> bits(config.n, 0);
  for (std::uint64_t i = 0; i < config.k; ++i) {
    const auto j = i + rng.uniform_below(config.n - i);
    std::swap(order[i], order[j]);
    bits[order[i]] = 1;
  }
  return GroundTruth(std::move(bits));
}

GroundTruth sample_ground_truth(const ProblemConfig& config, RngHandle handle) {
  Rng rng(handle);
  return sample_ground_truth(config, rng);
}

PoolingGraph::PoolingGraph(std::uint64_t n, std::uint64_t gamma, std::vector<AgentIndex> draws)
    : n_(n), gamma_(gamma), draws_(std::move(draws)) {
  require(n_ >= 1, ErrorCode::InvalidConfig, "graph needs at least one agent");
  require(gamma_ >= 1, ErrorCode::InvalidConfig, "query size must be positive");
  require(draws_.size() % gamma_ == 0, ErrorCode::InvalidInput, "draw list is not a multiple of the query size");
  m_ = draws_.size() / gamma_;

  multi_degree_.assign(n_, 0);
  distinct_degree_.assign(n_, 0);
  query_offsets_.assign(1, 0);
  query_offsets_.reserve(m_ + 1);
  query_distinct_.reserve(draws_.size());

  std::vector<std::uint32_t> stamp(n_, std::numeric_limits<std::uint32_t>::max());
  for (std::uint64_t j = 0; j < m_; ++j) {
    for (std::uint64_t r = 0; r < gamma_; ++r) {
      const AgentIndex agent = draws_[j * gamma_ + r];
      require(agent < n_, ErrorCode::InvalidInput, "agent index out of range in query " + std::to_string(j));
      ++multi_degree_[agent];
      if (stamp[agent] != j) {
        stamp[agent] = static_cast<std::uint32_t>(j);
        ++distinct_degree_[agent];
        query_distinct_.push_back(agent);
      }
    }
    query_offsets_.push_back(query_distinct_.size());
  }

  membership_offsets_.assign(n_ + 1, 0);
  for (std::uint64_t i = 0; i < n_; ++i) membership_offsets_[i + 1] = membership_offsets_[i] + distinct_degree_[i];
  membership_.resize(membership_offsets_[n_]);
  std::vector<std::size_t> cursor(membership_offsets_.begin(), membership_offsets_.end() - 1);
  // Queries are visited in increasing order, so each list comes out sorted.
  for (std::uint64_t j = 0; j < m_; ++j) {
    for (AgentIndex agent : distinct_agents(j)) membership_[cursor[agent]++] = static_cast<std::uint32_t>(j);
  }
}

PoolingGraph PoolingGraph::from_queries(std::uint64_t n, std::uint64_t gamma,
                                        const std::vector<std::vector<AgentIndex>>& queries) {
  std::vector<AgentIndex> draws;
  draws.reserve(queries.size() * gamma);
  for (std::size_t j = 0; j < queries.size(); ++j) {
    require(queries[j].size() == gamma, ErrorCode::InvalidInput,
            "query " + std::to_string(j) + " has " + std::to_string(queries[j].size()) +
                " draws, expected " + std::to_string(gamma));
    draws.insert(draws.end(), queries[j].begin(), queries[j].end());
  }
  return PoolingGraph(n, gamma, std::move(draws));
}

PoolingGraph PoolingGraph::prefix(std::uint64_t m) const {
  require(m <= m_, ErrorCode::InvalidInput, "prefix longer than the graph");
  return PoolingGraph(n_, gamma_, std::vector<AgentIndex>(draws_.begin(), draws_.begin() + static_cast<std::ptrdiff_t>(m * gamma_)));
}

void PoolingGraph::write_text(std::ostream& out) const {
  out << n_ << ' ' << m_ << ' ' << gamma_ << '\n';
  for (std::uint64_t j = 0; j < m_; ++j) {
    const auto row = draws(j);
    for (std::size_t r = 0; r < row.size(); ++r) {
      if (r) out << ' ';
      out << row[r];
    }
    out << '\n';
  }
}

PoolingGraph PoolingGraph::read_text(std::istream& in) {
  std::uint64_t n = 0, m = 0, gamma = 0;
  require(static_cast<bool>(in >> n >> m >> gamma), ErrorCode::InvalidInput, "malformed graph header");
  std::vector<AgentIndex> draws(m * gamma);
  for (auto& d : draws) {
    std::uint64_t value = 0;
    require(static_cast<bool>(in >> value), ErrorCode::InvalidInput, "truncated graph body");
    require(value < n, ErrorCode::InvalidInput, "agent index out of range");
    d = static_cast<AgentIndex>(value);
  }
  return PoolingGraph(n, gamma, std::move(draws));
}

void sample_query_draws(std::uint64_t n, std::uint64_t gamma, Rng& rng, std::vector<AgentIndex>& out) {
  for (std::uint64_t r = 0; r < gamma; ++r) out.push_back(static_cast<AgentIndex>(rng.uniform_below(n)));
}

PoolingGraph sample_pooling_graph(const ProblemConfig& config, Rng& rng) {
  config.validate();
  std::vector<AgentIndex> draws;
  draws.reserve(config.m * config.gamma);
  for (std::uint64_t j = 0; j < config.m; ++j) sample_query_draws(config.n, config.gamma, rng, draws);
  return PoolingGraph(config.n, config.gamma, std::move(draws));
}

PoolingGraph sample_pooling_graph(const ProblemConfig& config, RngHandle handle) {
  Rng rng(handle);
  return sample_pooling_graph(config, rng);
}

DegreeSummary degree_summary(const PoolingGraph& graph) {
  require(graph.queries() >= 1, ErrorCode::EmptyGraph, "degree summary of a graph without queries");
  const auto multi = graph.multi_degree();
  const auto distinct = graph.distinct_degree();
  DegreeSummary s;
  s.min_multi = *std::min_element(multi.begin(), multi.end());
  s.max_multi = *std::max_element(multi.begin(), multi.end());
  s.min_distinct = *std::min_element(distinct.begin(), distinct.end());
  s.max_distinct = *std::max_element(distinct.begin(), distinct.end());
  double ratio_sum = 0.0;
  std::size_t ratio_count = 0;
  for (std::size_t i = 0; i < multi.size(); ++i) {
    s.mean_multi += multi[i];
    s.mean_distinct += distinct[i];
    if (multi[i] > 0) {
      ratio_sum += static_cast<double>(distinct[i]) / multi[i];
      ++ratio_count;
    }
  }
  s.mean_multi /= static_cast<double>(multi.size());
  s.mean_distinct /= static_cast<double>(multi.size());
  s.mean_ratio = ratio_count ? ratio_sum / static_cast<double>(ratio_count) : 0.0;
  return s;
}

}  // namespace pooled
