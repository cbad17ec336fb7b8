#include "theory.hpp"

#include <cmath>
#include <numbers>

#include "error.hpp"

namespace pooled {

double gamma_constant() { return -std::expm1(-0.5); }

void validate(const ThresholdQuery& query) {
  require(query.n >= 2, ErrorCode::InvalidConfig, "threshold needs n >= 2");
  require(query.eps >= 0.0 && std::isfinite(query.eps), ErrorCode::InvalidConfig, "eps must be non-negative");
  require(query.regime.kind != RegimeKind::Explicit, ErrorCode::InvalidConfig,
          "threshold needs a sublinear or linear regime");
  require(query.regime.param > 0.0 && query.regime.param < 1.0, ErrorCode::InvalidConfig,
          "regime parameter must lie in (0,1)");
  switch (query.channel) {
    case ChannelKind::Noiseless:
      require(query.p == 0.0 && query.q == 0.0, ErrorCode::InvalidConfig, "noiseless model takes p = q = 0");
      break;
    case ChannelKind::Z:
      require(query.q == 0.0, ErrorCode::InvalidConfig, "Z-channel requires q = 0");
      require(query.p >= 0.0 && query.p < 1.0, ErrorCode::InvalidConfig, "Z-channel requires p in [0,1)");
      break;
    case ChannelKind::General:
      require(query.q > 0.0, ErrorCode::InvalidConfig, "general channel requires q > 0");
      require(query.p >= 0.0 && query.p + query.q < 1.0, ErrorCode::InvalidConfig,
              "general channel requires p >= 0 and p + q < 1");
      break;
    case ChannelKind::NoisyQuery:
      require(query.lambda >= 0.0, ErrorCode::InvalidConfig, "lambda must be non-negative");
      break;
  }
}

double required_queries_value(const ThresholdQuery& query) {
  validate(query);
  const double gamma = gamma_constant();
  const double n = static_cast<double>(query.n);
  const double log_n = std::log(n);
  const bool noisy_query = query.channel == ChannelKind::NoisyQuery;
  const double p = noisy_query ? 0.0 : query.p;
  const double q = noisy_query ? 0.0 : query.q;
  const double signal = 1.0 - p - q;

  if (query.regime.kind == RegimeKind::Sublinear) {
    const double theta = query.regime.param;
    const double spread = (1.0 + std::sqrt(theta)) * (1.0 + std::sqrt(theta));
    const double leading = 4.0 * gamma + query.eps;
    if (query.channel == ChannelKind::General) {
      return leading * q * spread / (signal * signal) * n * log_n;
    }
    const double k = static_cast<double>(query.regime.derive_k(query.n));
    return leading * spread / (1.0 - p) * k * log_n;
  }
  const double zeta = query.regime.param;
  return (16.0 * gamma + query.eps) * (q + signal) / (signal * signal) * zeta * n * log_n;
}

std::uint64_t required_queries_bound(const ThresholdQuery& query) {
  return static_cast<std::uint64_t>(std::ceil(required_queries_value(query)));
}

Feasibility noisy_query_feasibility(std::uint64_t m, std::uint64_t n, double lambda, double c_safe, double c_fail) {
  require(c_safe > 0.0 && c_fail > 0.0, ErrorCode::InvalidConfig, "feasibility constants must be positive");
  require(n >= 2, ErrorCode::InvalidConfig, "feasibility needs n >= 2");
  const double variance = lambda * lambda;
  const double md = static_cast<double>(m);
  if (variance <= c_safe * md / std::log(static_cast<double>(n))) return Feasibility::Achievable;
  if (variance >= c_fail * md) return Feasibility::Failing;
  return Feasibility::Indeterminate;
}

double chernoff_bound(double mean, double eps, TailSide side) {
  require(mean >= 0.0 && eps >= 0.0, ErrorCode::InvalidInput, "Chernoff bound needs mean, eps >= 0");
  const double exponent = side == TailSide::Upper ? eps * eps / (2.0 + eps) : eps * eps / 2.0;
  return std::exp(-exponent * mean);
}

TailBounds gaussian_tail_bounds(double lambda, double y) {
  require(lambda > 0.0 && y > 0.0, ErrorCode::InvalidInput, "Gaussian tail bounds need lambda, y > 0");
  const double ratio = lambda / y;
  const double density = std::exp(-y * y / (2.0 * lambda * lambda)) / std::sqrt(2.0 * std::numbers::pi);
  return {(ratio - ratio * ratio * ratio) * density, ratio * density};
}

double gaussian_tail(double lambda, double y) {
  return 0.5 * std::erfc(y / (lambda * std::numbers::sqrt2));
}

}  // namespace pooled
