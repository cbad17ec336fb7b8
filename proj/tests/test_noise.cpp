#include <cmath>
#include <vector>

#include "doctest.h"
#include "error.hpp"
#include "fixtures.hpp"
#include "greedy.hpp"
#include "model.hpp"
#include "noise.hpp"

using namespace pooled;

namespace {

// Row-by-row A sigma from the raw draw list.
std::vector<double> product_oracle(const PoolingGraph& g, const GroundTruth& truth) {
  std::vector<double> out;
  for (std::size_t j = 0; j < g.queries(); ++j) {
    long sum = 0;
    for (AgentIndex a : g.draws(j)) sum += truth.bits()[a];
    out.push_back(static_cast<double>(sum));
  }
  return out;
}

}  // namespace

TEST_CASE("exact results on the small graph") {
  const auto results = measure(fixtures::small_graph(), fixtures::small_truth(), ExactModel{}, RngHandle{1, 1});
  CHECK(results.values == std::vector<double>{2, 3, 1, 1, 1});
}

TEST_CASE("exact results equal the matrix product") {
  for (std::uint64_t s = 0; s < 25; ++s) {
    const auto config = ProblemConfig::from_regime(50 + 13 * s, Regime::sublinear(0.4), 30);
    const auto truth = sample_ground_truth(config, RngHandle{s, 0});
    const auto g = sample_pooling_graph(config, RngHandle{s, 1});
    CHECK(measure(g, truth, ExactModel{}, RngHandle{s, 2}).values == product_oracle(g, truth));
  }
}

TEST_CASE("zero query noise is exact") {
  const auto config = ProblemConfig::from_regime(300, Regime::sublinear(0.25), 40);
  const auto truth = sample_ground_truth(config, RngHandle{4, 0});
  const auto g = sample_pooling_graph(config, RngHandle{4, 1});
  const auto exact = measure(g, truth, ExactModel{}, RngHandle{4, 2});
  const auto gauss = measure(g, truth, NoisyQuery{0.0}, RngHandle{4, 2});
  CHECK(exact.values == gauss.values);
  const auto channel = measure(g, truth, NoisyChannel{0.0, 0.0}, RngHandle{4, 2});
  CHECK(exact.values == channel.values);
}

TEST_CASE("channel mean matches the expected flip rate") {
  const auto g = fixtures::small_graph();
  const auto truth = fixtures::small_truth();
  for (const NoisyChannel channel : {NoisyChannel{0.1, 0.0}, NoisyChannel{0.3, 0.2}, NoisyChannel{0.05, 0.4}}) {
    Rng rng(RngHandle{99, 0});
    const int reps = 10000;
    for (std::size_t j = 0; j < g.queries(); ++j) {
      double ones = 0.0, zeros = 0.0;
      for (AgentIndex a : g.draws(j)) (truth.is_one(a) ? ones : zeros) += 1.0;
      const double expected = ones * (1.0 - channel.p) + zeros * channel.q;
      double sum = 0.0, sum_sq = 0.0;
      for (int r = 0; r < reps; ++r) {
        const double v = measure_query(g.draws(j), truth, channel, rng);
        sum += v;
        sum_sq += v * v;
      }
      const double mean = sum / reps;
      const double se = std::sqrt((sum_sq / reps - mean * mean) / reps);
      CHECK(std::fabs(mean - expected) <= 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("query noise has the requested spread") {
  const auto g = fixtures::small_graph();
  const auto truth = fixtures::small_truth();
  Rng rng(RngHandle{5, 5});
  const int reps = 20000;
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double noise = measure_query(g.draws(0), truth, NoisyQuery{2.0}, rng) - 2.0;
    sum += noise;
    sum_sq += noise * noise;
  }
  CHECK(std::fabs(sum / reps) < 5.0 * 2.0 / std::sqrt(reps));
  CHECK(std::sqrt(sum_sq / reps) == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("measurement leaves its inputs alone") {
  const auto g = fixtures::small_graph();
  const auto truth = fixtures::small_truth();
  const auto g_copy = g;
  const auto truth_copy = truth;
  measure(g, truth, NoisyChannel{0.3, 0.1}, RngHandle{1, 2});
  measure(g, truth, NoisyQuery{1.5}, RngHandle{1, 3});
  CHECK(g == g_copy);
  CHECK(truth == truth_copy);
}

TEST_CASE("noise models validate") {
  CHECK_THROWS_AS(validate(NoisyChannel{1.0, 0.0}), Error);
  CHECK_THROWS_AS(validate(NoisyChannel{-0.1, 0.0}), Error);
  CHECK_THROWS_AS(validate(NoisyChannel{0.6, 0.5}), Error);
  CHECK_THROWS_AS(validate(NoisyQuery{-1.0}), Error);
  CHECK_NOTHROW(validate(NoisyChannel{0.5, 0.4}));
  CHECK(model_name(ExactModel{}) == "none");
  CHECK(model_name(NoisyChannel{0.1, 0.0}) == "z");
  CHECK(model_name(NoisyChannel{0.1, 0.1}) == "gnc");
  CHECK(model_name(NoisyQuery{1.0}) == "gauss");
}

TEST_CASE("second neighbourhood of x3 on the small graph") {
  const auto g = fixtures::small_graph();
  ChannelTrace trace;
  measure(g, fixtures::small_truth(), ExactModel{}, RngHandle{0, 0}, &trace);
  CHECK(second_neighborhood_count(g, 2, trace) == 3);
  CHECK(own_observed_contribution(g, 2, trace) == 3);
  // x2 is a zero drawn twice by one query: nothing of its own.
  CHECK(own_observed_contribution(g, 1, trace) == 0);
}

TEST_CASE("neighbourhood sum splits into second neighbourhood and own draws") {
  int instance = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    Rng rng(RngHandle{s, 17});
    const std::uint64_t n = 2 + rng.uniform_below(19);
    const std::uint64_t k = rng.uniform_below(n + 1);
    const std::uint64_t gamma = 1 + rng.uniform_below(n);
    const std::uint64_t m = rng.uniform_below(12);
    const ProblemConfig config{n, k, m, gamma, Regime{}};
    const auto truth = sample_ground_truth(config, rng);
    const auto g = sample_pooling_graph(config, rng);
    const NoiseModel models[] = {ExactModel{}, NoisyChannel{0.2, 0.0}, NoisyChannel{0.25, 0.15}};
    for (const auto& model : models) {
      ChannelTrace trace;
      const auto results = measure(g, truth, model, rng, &trace);
      const auto psi = neighborhood_sums(g, results);
      for (AgentIndex i = 0; i < n; ++i) {
        const auto split = second_neighborhood_count(g, i, trace) + own_observed_contribution(g, i, trace);
        CHECK(psi[i] == static_cast<double>(split));
        if (std::holds_alternative<ExactModel>(model)) {
          CHECK(own_observed_contribution(g, i, trace) == (truth.is_one(i) ? g.multi_degree()[i] : 0u));
        }
      }
      ++instance;
    }
  }
  CHECK(instance == 120);
}
