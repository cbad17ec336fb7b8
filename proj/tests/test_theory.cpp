#include <cmath>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "doctest.h"
#include "error.hpp"
#include "rng.hpp"
#include "theory.hpp"

using namespace pooled;
using big = boost::multiprecision::cpp_bin_float_50;

namespace {

big big_gamma() { return big(1) - exp(big(-0.5)); }

// Independent high-precision evaluation of the three branch formulas.
big oracle_value(const ThresholdQuery& q) {
  const big n(q.n);
  const big ln_n = log(n);
  const big eps(q.eps);
  const big p(q.p), qq(q.q);
  if (q.regime.kind == RegimeKind::Linear) {
    const big zeta(q.regime.param);
    const big d = big(1) - p - qq;
    return (16 * big_gamma() + eps) * (qq + d) / (d * d) * zeta * n * ln_n;
  }
  const big theta(q.regime.param);
  const big k = round(pow(n, theta));
  const big shape = (1 + sqrt(theta)) * (1 + sqrt(theta));
  if (q.channel == ChannelKind::General) {
    const big d = big(1) - p - qq;
    return (4 * big_gamma() + eps) * qq * shape / (d * d) * n * ln_n;
  }
  return (4 * big_gamma() + eps) * shape / (big(1) - p) * k * ln_n;
}

std::uint64_t oracle_bound(const ThresholdQuery& q) { return static_cast<std::uint64_t>(ceil(oracle_value(q))); }

}  // namespace

TEST_CASE("gamma constant") {
  CHECK(gamma_constant() == doctest::Approx(0.39346934028736658).epsilon(1e-15));
  CHECK(std::fabs(gamma_constant() - static_cast<double>(big_gamma())) < 1e-16);
  CHECK(4 * gamma_constant() == doctest::Approx(1.5738773611494663).epsilon(1e-15));
}

TEST_CASE("worked threshold values") {
  ThresholdQuery z{1000, Regime::sublinear(0.25), ChannelKind::Z, 0.1, 0.0, 0.0, 0.1};
  CHECK(required_queries_bound(z) == 174);
  CHECK(required_queries_bound(z) == oracle_bound(z));

  ThresholdQuery linear{100, Regime::linear(0.1), ChannelKind::Noiseless, 0.0, 0.0, 0.0, 0.0};
  CHECK(required_queries_bound(linear) == 290);
  CHECK(required_queries_bound(linear) == oracle_bound(linear));

  ThresholdQuery noiseless{1000, Regime::sublinear(0.25), ChannelKind::Noiseless, 0.0, 0.0, 0.0, 0.1};
  ThresholdQuery z0 = noiseless;
  z0.channel = ChannelKind::Z;
  ThresholdQuery gauss = noiseless;
  gauss.channel = ChannelKind::NoisyQuery;
  gauss.lambda = 3.0;
  const double expected = (4 * gamma_constant() + 0.1) * 1.5 * 1.5 * 6 * std::log(1000.0);
  CHECK(required_queries_value(noiseless) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(required_queries_value(z0) == required_queries_value(noiseless));
  CHECK(required_queries_value(gauss) == required_queries_value(noiseless));
}

TEST_CASE("bounds agree with the high-precision oracle on a grid") {
  for (std::uint64_t n : {50ull, 1000ull, 31623ull, 1000000ull}) {
    for (double theta : {0.1, 0.25, 0.5, 0.8}) {
      for (double p : {0.0, 0.1, 0.37}) {
        for (double eps : {0.0, 0.05, 0.5}) {
          ThresholdQuery z{n, Regime::sublinear(theta), ChannelKind::Z, p, 0.0, 0.0, eps};
          CHECK(required_queries_value(z) == doctest::Approx(static_cast<double>(oracle_value(z))).epsilon(1e-13));
          CHECK(required_queries_bound(z) == oracle_bound(z));
          for (double q : {1e-5, 0.01, 0.2}) {
            ThresholdQuery gnc{n, Regime::sublinear(theta), ChannelKind::General, p, q, 0.0, eps};
            CHECK(required_queries_bound(gnc) == oracle_bound(gnc));
            ThresholdQuery lin{n, Regime::linear(theta), ChannelKind::General, p, q, 0.0, eps};
            CHECK(required_queries_bound(lin) == oracle_bound(lin));
          }
        }
      }
    }
  }
}

TEST_CASE("bounds are monotone") {
  for (std::uint64_t n : {100ull, 10000ull}) {
    for (double eps : {0.0, 0.1}) {
      double prev = 0.0;
      for (double p = 0.0; p < 0.95; p += 0.05) {
        const double v = required_queries_value({n, Regime::sublinear(0.3), ChannelKind::Z, p, 0.0, 0.0, eps});
        CHECK(v >= prev);
        prev = v;
      }
      prev = 0.0;
      for (double q = 0.01; q < 0.8; q += 0.05) {
        const double v = required_queries_value({n, Regime::sublinear(0.3), ChannelKind::General, 0.1, q, 0.0, eps});
        CHECK(v >= prev);
        prev = v;
      }
      prev = 0.0;
      for (double q = 0.01; q < 0.8; q += 0.05) {
        const double v = required_queries_value({n, Regime::linear(0.2), ChannelKind::General, 0.1, q, 0.0, eps});
        CHECK(v >= prev);
        prev = v;
      }
    }
    for (ChannelKind kind : {ChannelKind::Noiseless, ChannelKind::Z, ChannelKind::General, ChannelKind::NoisyQuery}) {
      double prev = 0.0;
      for (double eps = 0.0; eps < 2.0; eps += 0.1) {
        ThresholdQuery q{n, Regime::sublinear(0.4), kind, 0.0, 0.0, 0.0, eps};
        if (kind == ChannelKind::Z || kind == ChannelKind::General) q.p = 0.2;
        if (kind == ChannelKind::General) q.q = 0.1;
        CHECK(required_queries_value(q) >= prev);
        prev = required_queries_value(q);
      }
    }
  }
}

TEST_CASE("general channel against the Z channel") {
  // The general branch scales with q n instead of k, so it dominates exactly
  // when q n (1-p) > k (1-p-q)^2.
  int dominated = 0;
  for (std::uint64_t n : {100ull, 1000ull, 100000ull}) {
    const double k = std::round(std::pow(static_cast<double>(n), 0.25));
    for (double p : {0.0, 0.1, 0.4}) {
      for (double q : {1e-6, 1e-3, 0.1}) {
        const ThresholdQuery z{n, Regime::sublinear(0.25), ChannelKind::Z, p, 0.0, 0.0, 0.05};
        const ThresholdQuery gnc{n, Regime::sublinear(0.25), ChannelKind::General, p, q, 0.0, 0.05};
        const bool predicted = q * n * (1 - p) > k * (1 - p - q) * (1 - p - q);
        CHECK((required_queries_value(gnc) > required_queries_value(z)) == predicted);
        dominated += predicted;
      }
    }
  }
  CHECK(dominated >= 12);
}

TEST_CASE("linear bound without noise") {
  for (std::uint64_t n : {10ull, 100ull, 5000ull}) {
    for (double zeta : {0.01, 0.1, 0.5}) {
      for (double eps : {0.0, 0.3}) {
        const ThresholdQuery q{n, Regime::linear(zeta), ChannelKind::Noiseless, 0.0, 0.0, 0.0, eps};
        const double expected = (16 * gamma_constant() + eps) * zeta * n * std::log(static_cast<double>(n));
        CHECK(required_queries_value(q) == doctest::Approx(expected).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("invalid threshold queries") {
  CHECK_THROWS_AS(required_queries_bound({1000, Regime::sublinear(0.25), ChannelKind::Z, 0.1, 0.1, 0.0, 0.1}), Error);
  CHECK_THROWS_AS(required_queries_bound({1000, Regime::sublinear(0.25), ChannelKind::Z, 1.0, 0.0, 0.0, 0.1}), Error);
  CHECK_THROWS_AS(required_queries_bound({1000, Regime::sublinear(0.25), ChannelKind::General, 0.6, 0.4, 0.0, 0.1}),
                  Error);
  CHECK_THROWS_AS(required_queries_bound({1000, Regime::sublinear(1.5), ChannelKind::Noiseless, 0, 0, 0, 0.1}), Error);
  CHECK_THROWS_AS(required_queries_bound({1000, Regime::sublinear(0.25), ChannelKind::Noiseless, 0, 0, 0, -1}), Error);
}

TEST_CASE("noisy query feasibility") {
  CHECK(noisy_query_feasibility(1, 1000, 0.0) == Feasibility::Achievable);
  CHECK(noisy_query_feasibility(500, 1000, 0.0) == Feasibility::Achievable);
  CHECK(noisy_query_feasibility(400, 1000, 20.0) == Feasibility::Failing);
  CHECK(noisy_query_feasibility(1000, 1000, 2.0) == Feasibility::Achievable);
  CHECK(noisy_query_feasibility(1000, 1000, 20.0) == Feasibility::Indeterminate);
  CHECK(noisy_query_feasibility(1000, 1000, 20.0, 20.0, 1.0) == Feasibility::Achievable);
}

TEST_CASE("chernoff bounds") {
  CHECK(chernoff_bound(50.0, 0.0, TailSide::Upper) == 1.0);
  CHECK(chernoff_bound(50.0, 0.0, TailSide::Lower) == 1.0);
  const double expected = static_cast<double>(exp(big(-1) / big(21) * 10));
  CHECK(chernoff_bound(100.0, 0.1, TailSide::Upper) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(chernoff_bound(100.0, 0.1, TailSide::Lower) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  double prev = 2.0;
  for (double mean = 0.0; mean < 500.0; mean += 10.0) {
    const double v = chernoff_bound(mean, 0.2, TailSide::Upper);
    CHECK(v < prev);
    CHECK(v >= chernoff_bound(mean, 0.2, TailSide::Lower));
    prev = v;
  }
}

TEST_CASE("gaussian tail sandwich") {
  const auto at_lambda = gaussian_tail_bounds(1.7, 1.7);
  CHECK(at_lambda.lower == 0.0);
  CHECK(at_lambda.upper == doctest::Approx(0.24197072451914337).epsilon(1e-14));

  const auto three = gaussian_tail_bounds(1.0, 3.0);
  CHECK(gaussian_tail(1.0, 3.0) == doctest::Approx(0.0013498980316301).epsilon(1e-12));
  CHECK(three.lower <= gaussian_tail(1.0, 3.0));
  CHECK(gaussian_tail(1.0, 3.0) <= three.upper);

  Rng rng(RngHandle{10, 10});
  for (int i = 0; i < 1000; ++i) {
    const double lambda = 0.01 + 20.0 * rng.uniform01();
    const double t = 1.1 + 8.9 * rng.uniform01();
    const double y = t * lambda;
    const auto bounds = gaussian_tail_bounds(lambda, y);
    const double tail = 0.5 * std::erfc(t / std::sqrt(2.0));
    CHECK(bounds.lower <= tail * (1 + 1e-12));
    CHECK(tail <= bounds.upper * (1 + 1e-12));
  }

  // Mills ratio tightens slowly: about 1.5% above the tail at 8 lambda and
  // under 1% from 10 lambda on.
  CHECK(gaussian_tail_bounds(1.0, 8.0).upper / gaussian_tail(1.0, 8.0) < 1.02);
  CHECK(gaussian_tail_bounds(1.0, 10.0).upper / gaussian_tail(1.0, 10.0) < 1.01);
  CHECK(gaussian_tail_bounds(1.0, 8.0).upper / gaussian_tail(1.0, 8.0) > 1.0);
}
