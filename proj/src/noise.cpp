#include "noise.hpp"

#include <cmath>

#include "error.hpp"

namespace pooled {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void validate(const NoiseModel& model) {
  std::visit(overloaded{
                 [](const ExactModel&) {},
                 [](const NoisyChannel& c) {
                   require(c.p >= 0.0 && c.p < 1.0 && c.q >= 0.0 && c.q < 1.0, ErrorCode::InvalidConfig,
                           "channel probabilities must lie in [0,1)");
                   require(c.p + c.q < 1.0, ErrorCode::InvalidConfig, "channel requires p + q < 1");
                 },
                 [](const NoisyQuery& g) {
                   require(g.lambda >= 0.0 && std::isfinite(g.lambda), ErrorCode::InvalidConfig,
                           "query noise lambda must be finite and non-negative");
                 },
             },
             model);
}

std::string model_name(const NoiseModel& model) {
  return std::visit(overloaded{
                        [](const ExactModel&) { return std::string("none"); },
                        [](const NoisyChannel& c) { return std::string(c.q > 0.0 ? "gnc" : "z"); },
                        [](const NoisyQuery&) { return std::string("gauss"); },
                    },
                    model);
}

double measure_query(std::span<const AgentIndex> draws, const GroundTruth& truth, const NoiseModel& model,
                     Rng& rng, std::vector<std::uint8_t>* trace) {
  if (const auto* channel = std::get_if<NoisyChannel>(&model)) {
    std::uint64_t sum = 0;
    for (AgentIndex agent : draws) {
      const bool observed = truth.is_one(agent) ? !rng.bernoulli(channel->p) : rng.bernoulli(channel->q);
      sum += observed;
      if (trace) trace->push_back(observed);
    }
    return static_cast<double>(sum);
  }
  std::uint64_t sum = 0;
  for (AgentIndex agent : draws) {
    sum += truth.is_one(agent);
    if (trace) trace->push_back(truth.is_one(agent));
  }
  double value = static_cast<double>(sum);
  if (const auto* gauss = std::get_if<NoisyQuery>(&model); gauss && gauss->lambda > 0.0) {
    value += gauss->lambda * rng.normal();
  }
  return value;
}

QueryResults measure(const PoolingGraph& graph, const GroundTruth& truth, const NoiseModel& model, Rng& rng,
                     ChannelTrace* trace) {
  validate(model);
  require(truth.size() == graph.agents(), ErrorCode::InvalidInput,
          "ground truth has " + std::to_string(truth.size()) + " agents, graph has " +
              std::to_string(graph.agents()));
  QueryResults results;
  results.values.reserve(graph.queries());
  std::vector<std::uint8_t>* sink = nullptr;
  if (trace) {
    trace->observed.clear();
    trace->observed.reserve(graph.all_draws().size());
    sink = &trace->observed;
  }
  for (std::uint64_t j = 0; j < graph.queries(); ++j) {
    results.values.push_back(measure_query(graph.draws(j), truth, model, rng, sink));
  }
  return results;
}

QueryResults measure(const PoolingGraph& graph, const GroundTruth& truth, const NoiseModel& model,
                     RngHandle handle, ChannelTrace* trace) {
  Rng rng(handle);
  return measure(graph, truth, model, rng, trace);
}

namespace {

void check_trace(const PoolingGraph& graph, AgentIndex agent, const ChannelTrace& trace) {
  require(agent < graph.agents(), ErrorCode::InvalidInput, "agent index out of range");
  require(trace.observed.size() == graph.all_draws().size(), ErrorCode::InvalidInput,
          "channel trace does not match the graph");
}

}  // namespace

std::uint64_t second_neighborhood_count(const PoolingGraph& graph, AgentIndex agent, const ChannelTrace& trace) {
  check_trace(graph, agent, trace);
  const auto gamma = graph.query_size();
  std::uint64_t count = 0;
  for (std::uint32_t j : graph.membership(agent)) {
    const auto row = graph.draws(j);
    for (std::size_t r = 0; r < row.size(); ++r) {
      if (row[r] != agent) count += trace.observed[j * gamma + r];
    }
  }
  return count;
}

std::uint64_t own_observed_contribution(const PoolingGraph& graph, AgentIndex agent, const ChannelTrace& trace) {
  check_trace(graph, agent, trace);
  const auto gamma = graph.query_size();
  std::uint64_t count = 0;
  for (std::uint32_t j : graph.membership(agent)) {
    const auto row = graph.draws(j);
    for (std::size_t r = 0; r < row.size(); ++r) {
      if (row[r] == agent) count += trace.observed[j * gamma + r];
    }
  }
  return count;
}

}  // namespace pooled
