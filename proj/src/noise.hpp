#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "model.hpp"
#include "rng.hpp"

namespace pooled {

struct ExactModel {};

// Each draw of a one-agent reads 1 with probability 1-p, each draw of a
// zero-agent reads 1 with probability q. Repeated draws flip independently.
struct NoisyChannel {
  double p = 0.0;
  double q = 0.0;
};

// Exact sum plus one N(0, lambda^2) variate per query. Results are not clamped.
struct NoisyQuery {
  double lambda = 0.0;
};

using NoiseModel = std::variant<ExactModel, NoisyChannel, NoisyQuery>;

void validate(const NoiseModel& model);
// "none", "z", "gnc" or "gauss"
std::string model_name(const NoiseModel& model);

struct QueryResults {
  std::vector<double> values;
};

// Realized per-draw observed bits of a channel measurement, laid out like
// PoolingGraph::all_draws(). Only filled in oracle/debug mode.
struct ChannelTrace {
  std::vector<std::uint8_t> observed;
};

// One query: `draws` are its agent indices. Appends the observed bits to
// `trace` when non-null (channel model only; other models record the true bits).
double measure_query(std::span<const AgentIndex> draws, const GroundTruth& truth, const NoiseModel& model,
                     Rng& rng, std::vector<std::uint8_t>* trace = nullptr);

QueryResults measure(const PoolingGraph& graph, const GroundTruth& truth, const NoiseModel& model, Rng& rng,
                     ChannelTrace* trace = nullptr);
QueryResults measure(const PoolingGraph& graph, const GroundTruth& truth, const NoiseModel& model,
                     RngHandle rng, ChannelTrace* trace = nullptr);

// Observed ones over all draws of the agent's distinct queries, excluding the
// agent's own draws. Psi_agent = this + own_observed_contribution(...).
std::uint64_t second_neighborhood_count(const PoolingGraph& graph, AgentIndex agent, const ChannelTrace& trace);
std::uint64_t own_observed_contribution(const PoolingGraph& graph, AgentIndex agent, const ChannelTrace& trace);

}  // namespace pooled
