#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "doctest.h"
#include "error.hpp"
#include "fixtures.hpp"
#include "model.hpp"

using namespace pooled;

TEST_CASE("small graph degrees by hand") {
  const auto g = fixtures::small_graph();
  const std::vector<std::uint32_t> multi{2, 3, 3, 3, 3, 2, 4};
  const std::vector<std::uint32_t> distinct{2, 2, 3, 3, 3, 2, 3};
  CHECK(std::vector<std::uint32_t>(g.multi_degree().begin(), g.multi_degree().end()) == multi);
  CHECK(std::vector<std::uint32_t>(g.distinct_degree().begin(), g.distinct_degree().end()) == distinct);

  const auto a3 = g.distinct_agents(2);
  CHECK(std::vector<AgentIndex>(a3.begin(), a3.end()) == std::vector<AgentIndex>{1, 2, 6});
  const auto x7 = g.membership(6);
  CHECK(std::vector<std::uint32_t>(x7.begin(), x7.end()) == std::vector<std::uint32_t>{2, 3, 4});
}

TEST_CASE("regime derivation of k") {
  CHECK(Regime::sublinear(0.25).derive_k(10000) == 10);
  CHECK(Regime::sublinear(0.25).derive_k(1000) == 6);
  CHECK(Regime::linear(0.1).derive_k(100) == 10);
  CHECK(Regime::sublinear(0.25).describe() == "sublinear(0.25)");
  CHECK_THROWS_AS(Regime{}.derive_k(10), Error);

  const auto config = ProblemConfig::from_regime(1001, Regime::sublinear(0.5), 7);
  CHECK(config.gamma == 500);
  CHECK(config.k == 32);
  CHECK(default_query_size(1) == 1);
}

TEST_CASE("invalid configurations are rejected") {
  ProblemConfig config{10, 11, 5, 5, Regime{}};
  CHECK_THROWS_AS(config.validate(), Error);
  config = ProblemConfig{0, 0, 5, 1, Regime{}};
  CHECK_THROWS_AS(config.validate(), Error);
  config = ProblemConfig{10, 2, 5, 0, Regime{}};
  CHECK_THROWS_AS(config.validate(), Error);
  try {
    sample_ground_truth(ProblemConfig{5, 6, 1, 2, Regime{}}, RngHandle{1, 0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
}

TEST_CASE("ground truth has weight k") {
  for (std::uint64_t k : {0, 1, 17, 99, 100}) {
    const ProblemConfig config{100, k, 0, 50, Regime{}};
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto truth = sample_ground_truth(config, RngHandle{s, 3});
      CHECK(truth.size() == 100);
      CHECK(truth.weight() == k);
      CHECK(std::accumulate(truth.bits().begin(), truth.bits().end(), 0u) == k);
    }
  }
}

TEST_CASE("ground truth positions are uniform") {
  // Each agent is a one with probability k/n; check every agent's count
  // against a 5-sigma binomial band.
  const ProblemConfig config{20, 5, 0, 10, Regime{}};
  const int reps = 20000;
  std::vector<int> counts(20, 0);
  for (int r = 0; r < reps; ++r) {
    const auto truth = sample_ground_truth(config, RngHandle{11, static_cast<std::uint64_t>(r)});
    for (AgentIndex i = 0; i < 20; ++i) counts[i] += truth.is_one(i);
  }
  const double mean = reps * 0.25;
  const double sd = std::sqrt(reps * 0.25 * 0.75);
  for (int c : counts) CHECK(std::fabs(c - mean) < 5 * sd);
}

TEST_CASE("sampled graphs keep the degree invariants") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto config = ProblemConfig::from_regime(257 + s * 31, Regime::sublinear(0.3), 40 + s);
    const auto g = sample_pooling_graph(config, RngHandle{s, 9});
    REQUIRE(g.queries() == config.m);
    REQUIRE(g.query_size() == config.gamma);

    const auto multi = g.multi_degree();
    const auto distinct = g.distinct_degree();
    const std::uint64_t half_edges = std::accumulate(multi.begin(), multi.end(), std::uint64_t{0});
    CHECK(half_edges == config.m * config.gamma);
    for (AgentIndex i = 0; i < g.agents(); ++i) {
      CHECK(distinct[i] <= multi[i]);
      CHECK(distinct[i] <= g.queries());
      CHECK(distinct[i] == g.membership(i).size());
      CHECK(std::is_sorted(g.membership(i).begin(), g.membership(i).end()));
    }
    // Distinct neighbourhoods against a set built from the draws.
    for (std::size_t j = 0; j < g.queries(); ++j) {
      std::vector<AgentIndex> expected(g.draws(j).begin(), g.draws(j).end());
      std::sort(expected.begin(), expected.end());
      expected.erase(std::unique(expected.begin(), expected.end()), expected.end());
      std::vector<AgentIndex> got(g.distinct_agents(j).begin(), g.distinct_agents(j).end());
      std::sort(got.begin(), got.end());
      CHECK(got == expected);
    }
  }
}

TEST_CASE("multi-degrees fit Binomial(m gamma, 1/n)") {
  const auto config = ProblemConfig::from_regime(1000, Regime::sublinear(0.25), 200);
  const auto g = sample_pooling_graph(config, RngHandle{2024, 1});
  const boost::math::binomial_distribution<double> law(static_cast<double>(config.m * config.gamma), 1.0 / 1000.0);

  // Bins [lo, hi] with expected count at least 5; tails merged into the ends.
  const double n = 1000.0;
  std::vector<std::pair<int, int>> bins;
  int lo = 0;
  for (int d = 0; d <= 400; ++d) {
    const double mass = boost::math::cdf(law, d) - (lo > 0 ? boost::math::cdf(law, lo - 1) : 0.0);
    if (mass * n >= 5.0 && boost::math::cdf(boost::math::complement(law, d)) * n >= 5.0) {
      bins.emplace_back(lo, d);
      lo = d + 1;
    }
  }
  bins.emplace_back(lo, 1 << 30);

  std::vector<double> observed(bins.size(), 0.0);
  for (std::uint32_t deg : g.multi_degree()) {
    for (std::size_t b = 0; b < bins.size(); ++b) {
      if (static_cast<int>(deg) >= bins[b].first && static_cast<int>(deg) <= bins[b].second) {
        observed[b] += 1.0;
        break;
      }
    }
  }
  double statistic = 0.0;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const double below = bins[b].first > 0 ? boost::math::cdf(law, bins[b].first - 1) : 0.0;
    const double upto = b + 1 == bins.size() ? 1.0 : boost::math::cdf(law, bins[b].second);
    const double expected = (upto - below) * n;
    statistic += (observed[b] - expected) * (observed[b] - expected) / expected;
  }
  const boost::math::chi_squared_distribution<double> reference(static_cast<double>(bins.size() - 1));
  const double p_value = boost::math::cdf(boost::math::complement(reference, statistic));
  INFO("chi2 = " << statistic << " over " << bins.size() << " bins");
  CHECK(bins.size() > 10);
  CHECK(p_value > 1e-3);
}

TEST_CASE("equal handles give identical graphs") {
  const auto config = ProblemConfig::from_regime(500, Regime::sublinear(0.25), 60);
  const RngHandle handle{77, 5};
  CHECK(sample_pooling_graph(config, handle) == sample_pooling_graph(config, handle));
  CHECK(sample_ground_truth(config, handle) == sample_ground_truth(config, handle));
  CHECK_FALSE(sample_pooling_graph(config, handle) == sample_pooling_graph(config, handle.derive(1)));
}

TEST_CASE("derived streams are distinct") {
  const RngHandle root{5, 0};
  CHECK_FALSE(root.derive(0) == root.derive(1));
  CHECK_FALSE(root.derive(0).derive(1) == root.derive(1).derive(0));
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}

TEST_CASE("rng distributions") {
  Rng rng(RngHandle{3, 3});
  std::vector<int> counts(7, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) ++counts[rng.uniform_below(7)];
  for (int c : counts) CHECK(std::fabs(c - draws / 7.0) < 5 * std::sqrt(draws / 7.0));

  double sum = 0.0, sum_sq = 0.0;
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) {
    const double x = rng.normal();
    sum += x;
    sum_sq += x * x;
  }
  CHECK(std::fabs(sum / samples) < 5.0 / std::sqrt(samples));
  CHECK(std::fabs(sum_sq / samples - 1.0) < 5.0 * std::sqrt(2.0 / samples));
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform01();
    CHECK((u >= 0.0 && u < 1.0));
  }
}

TEST_CASE("prefix and text round trip") {
  const auto config = ProblemConfig::from_regime(64, Regime::sublinear(0.5), 12);
  const auto g = sample_pooling_graph(config, RngHandle{8, 8});
  std::stringstream text;
  g.write_text(text);
  CHECK(PoolingGraph::read_text(text) == g);

  const auto head = g.prefix(5);
  CHECK(head.queries() == 5);
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(std::equal(head.draws(j).begin(), head.draws(j).end(), g.draws(j).begin()));
  }
  std::stringstream broken("4 2 3\n0 1 2\n0 1");
  CHECK_THROWS_AS(PoolingGraph::read_text(broken), Error);
}

TEST_CASE("degree summary") {
  const auto summary = degree_summary(fixtures::small_graph());
  CHECK(summary.mean_multi == doctest::Approx(20.0 / 7.0));
  CHECK(summary.mean_distinct == doctest::Approx(18.0 / 7.0));
  CHECK(summary.max_multi == 4);
  CHECK(summary.min_distinct == 2);

  try {
    degree_summary(PoolingGraph(5, 2, {}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyGraph);
  }
}
