#pragma once

#include <cstdint>

#include "model.hpp"

namespace pooled {

// 1 - exp(-1/2). Twice this is the limiting ratio of distinct to multi-degree.
double gamma_constant();

enum class ChannelKind {
  Noiseless,
  Z,           // q = 0
  General,     // GNC, q > 0
  NoisyQuery,  // Gaussian query noise; the bound does not depend on lambda
};

// All logarithms are natural.
struct ThresholdQuery {
  std::uint64_t n = 0;
  Regime regime = Regime::sublinear(0.25);
  ChannelKind channel = ChannelKind::Noiseless;
  double p = 0.0;
  double q = 0.0;
  double lambda = 0.0;
  double eps = 0.05;
};

void validate(const ThresholdQuery& query);

// Right-hand side of the sufficient query count before rounding.
double required_queries_value(const ThresholdQuery& query);
// Ceiling of required_queries_value().
std::uint64_t required_queries_bound(const ThresholdQuery& query);

enum class Feasibility { Achievable, Failing, Indeterminate };

inline constexpr double kDefaultSafeConstant = 1.0;
inline constexpr double kDefaultFailConstant = 1.0;

// Achievable if lambda^2 <= c_safe * m / ln n, Failing if lambda^2 >= c_fail * m.
Feasibility noisy_query_feasibility(std::uint64_t m, std::uint64_t n, double lambda,
                                    double c_safe = kDefaultSafeConstant, double c_fail = kDefaultFailConstant);

enum class TailSide { Upper, Lower };

// Upper: exp(-eps^2/(2+eps) mean); lower: exp(-eps^2/2 mean).
double chernoff_bound(double mean, double eps, TailSide side);

struct TailBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Bounds on P(X >= y) for X ~ N(0, lambda^2):
//   upper (lambda/y) phi(y/lambda), lower (lambda/y - lambda^3/y^3) phi(y/lambda).
TailBounds gaussian_tail_bounds(double lambda, double y);

// P(X >= y) via erfc.
double gaussian_tail(double lambda, double y);

}  // namespace pooled
