#include "amp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"
#include "greedy.hpp"

namespace pooled {

DesignMatrix::DesignMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries,
                           Normalization normalization, double scale)
    : rows_(rows), cols_(cols), entries_(std::move(entries)), normalization_(normalization), scale_(scale) {
  require(entries_.size() == rows_ * cols_, ErrorCode::InvalidInput, "matrix entries do not match its shape");
}

std::vector<double> DesignMatrix::transform_results(std::span<const double> results) const {
  require(results.size() == rows_, ErrorCode::InvalidInput,
          "expected " + std::to_string(rows_) + " query results, got " + std::to_string(results.size()));
  std::vector<double> out(results.begin(), results.end());
  if (normalization_ == Normalization::CenteredScaled && rows_ > 0) {
    double mean = 0.0;
    for (double v : out) mean += v;
    mean /= static_cast<double>(rows_);
    for (double& v : out) v = (v - mean) / scale_;
  }
  return out;
}

void DesignMatrix::multiply(std::span<const double> x, std::span<double> out) const {
  for (std::size_t j = 0; j < rows_; ++j) {
    const double* row = entries_.data() + j * cols_;
    double sum = 0.0;
    for (std::size_t i = 0; i < cols_; ++i) sum += row[i] * x[i];
    out[j] = sum;
  }
}

void DesignMatrix::multiply_transposed(std::span<const double> z, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < rows_; ++j) {
    const double* row = entries_.data() + j * cols_;
    const double zj = z[j];
    if (zj == 0.0) continue;
    for (std::size_t i = 0; i < cols_; ++i) out[i] += row[i] * zj;
  }
}

DesignMatrix build_design_matrix(const PoolingGraph& graph, Normalization normalization, std::size_t budget_bytes) {
  const std::size_t m = graph.queries();
  const std::size_t n = graph.agents();
  const double bytes = static_cast<double>(m) * static_cast<double>(n) * sizeof(double);
  require(bytes <= static_cast<double>(budget_bytes), ErrorCode::Resource,
          "dense design matrix needs " + std::to_string(static_cast<std::uint64_t>(bytes)) +
              " bytes, budget is " + std::to_string(budget_bytes));

  std::vector<double> entries(m * n, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (AgentIndex agent : graph.draws(j)) entries[j * n + agent] += 1.0;
  }
  if (normalization == Normalization::None || m == 0) {
    return DesignMatrix(m, n, std::move(entries), normalization, 1.0);
  }

  // Entry variance of a multiplicity is (gamma/n)(1 - 1/n); scaling by
  // sqrt(m * variance) gives columns of unit expected squared norm.
  const double nd = static_cast<double>(n);
  const double variance = static_cast<double>(graph.query_size()) / nd * (1.0 - 1.0 / nd);
  const double scale = std::sqrt(static_cast<double>(m) * (variance > 0.0 ? variance : 1.0));
  const auto multi = graph.multi_degree();
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double column_mean = static_cast<double>(multi[i]) / static_cast<double>(m);
      entries[j * n + i] = (entries[j * n + i] - column_mean) / scale;
    }
  }
  return DesignMatrix(m, n, std::move(entries), normalization, scale);
}

namespace {

double logistic(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

}  // namespace

DenoiseValue denoise(const Denoiser& denoiser, double x, const DenoiseContext& context) {
  switch (denoiser.kind) {
    case Denoiser::Kind::Identity:
      return {x, 1.0};
    case Denoiser::Kind::SoftThreshold: {
      const double tau = denoiser.threshold_alpha > 0.0
                             ? denoiser.threshold_alpha * std::sqrt(std::max(context.noise_variance, 0.0))
                             : denoiser.threshold;
      const double magnitude = std::fabs(x) - tau;
      if (magnitude <= 0.0) return {0.0, 0.0};
      return {std::copysign(magnitude, x), 1.0};
    }
    case Denoiser::Kind::BayesBernoulli: {
      const double prior = denoiser.prior;
      if (prior <= 0.0) return {0.0, 0.0};
      if (prior >= 1.0) return {1.0, 0.0};
      const double variance = std::max(context.noise_variance, 1e-300);
      // Posterior log-odds of a one given x = bit + N(0, variance).
      const double log_odds = std::log(prior / (1.0 - prior)) + (2.0 * x - 1.0) / (2.0 * variance);
      const double value = logistic(log_odds);
      return {value, value * (1.0 - value) / variance};
    }
  }
  return {x, 1.0};
}

AmpState amp_initial_state(const DesignMatrix& matrix, std::span<const double> results) {
  require(results.size() == matrix.rows(), ErrorCode::InvalidInput, "result vector does not match the matrix");
  AmpState state;
  state.sigma.assign(matrix.cols(), 0.0);
  state.residual.assign(results.begin(), results.end());
  return state;
}

namespace {

double squared_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return sum;
}

void check_finite(std::span<const double> v, std::uint64_t iteration, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      fail(ErrorCode::Divergence,
           std::string("AMP diverged: non-finite ") + what + " at iteration " + std::to_string(iteration));
    }
  }
}

}  // namespace

AmpState amp_step(const AmpState& state, const DesignMatrix& matrix, std::span<const double> results,
                  const Denoiser& denoiser, bool onsager_correction) {
  const std::size_t m = matrix.rows();
  const std::size_t n = matrix.cols();
  require(results.size() == m && state.residual.size() == m && state.sigma.size() == n, ErrorCode::InvalidInput,
          "AMP state dimensions do not match the matrix");

  std::vector<double> pseudo(n);
  matrix.multiply_transposed(state.residual, pseudo);
  for (std::size_t i = 0; i < n; ++i) pseudo[i] += state.sigma[i];
  check_finite(pseudo, state.iteration, "pseudo-data");

  DenoiseContext context;
  context.iteration = state.iteration;
  context.noise_variance = m > 0 ? squared_norm(state.residual) / static_cast<double>(m) : 0.0;

  AmpState next;
  next.iteration = state.iteration + 1;
  next.sigma.resize(n);
  double derivative_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = denoise(denoiser, pseudo[i], context);
    next.sigma[i] = d.value;
    derivative_sum += d.derivative;
  }
  next.onsager = (onsager_correction && m > 0) ? derivative_sum / static_cast<double>(m) : 0.0;

  next.residual.resize(m);
  matrix.multiply(next.sigma, next.residual);
  for (std::size_t j = 0; j < m; ++j) {
    next.residual[j] = results[j] - next.residual[j] + next.onsager * state.residual[j];
  }
  check_finite(next.sigma, next.iteration, "estimate");
  check_finite(next.residual, next.iteration, "residual");
  return next;
}

AmpOutcome amp_run(const DesignMatrix& matrix, std::span<const double> results, std::uint64_t k,
                   const Denoiser& denoiser, const AmpOptions& options) {
  require(options.max_iters >= 1, ErrorCode::InvalidConfig, "max_iters must be at least 1");
  require(options.tol > 0.0, ErrorCode::InvalidConfig, "tol must be positive");
  require(k <= matrix.cols(), ErrorCode::InvalidInput, "k exceeds the number of agents");

  AmpOutcome outcome;
  AmpState state = amp_initial_state(matrix, results);
  const double root_n = std::sqrt(static_cast<double>(std::max<std::size_t>(matrix.cols(), 1)));
  while (outcome.iterations < options.max_iters) {
    AmpState next = amp_step(state, matrix, results, denoiser, options.onsager_correction);
    double change = 0.0;
    for (std::size_t i = 0; i < next.sigma.size(); ++i) {
      const double d = next.sigma[i] - state.sigma[i];
      change += d * d;
    }
    outcome.residual_norms.push_back(std::sqrt(squared_norm(next.residual)));
    ++outcome.iterations;
    state = std::move(next);
    if (std::sqrt(change) / root_n < options.tol) {
      outcome.converged = true;
      break;
    }
  }

  ScoreTable table;
  table.score = state.sigma;
  Estimate estimate = rank_and_declare(table, k);
  outcome.bits = std::move(estimate.bits);
  outcome.separation_margin = estimate.separation_margin;
  outcome.sigma = std::move(state.sigma);
  return outcome;
}

AmpOutcome amp_reconstruct(const PoolingGraph& graph, const QueryResults& results, std::uint64_t k,
                           const AmpConfig& config) {
  const DesignMatrix matrix = build_design_matrix(graph, config.normalization, config.budget_bytes);
  const std::vector<double> transformed = matrix.transform_results(results.values);
  const Denoiser denoiser =
      config.use_soft_threshold
          ? Denoiser::soft_threshold_scaled(config.soft_threshold_alpha)
          : Denoiser::bayes_bernoulli(static_cast<double>(k) / static_cast<double>(graph.agents()));
  return amp_run(matrix, transformed, k, denoiser, config.options);
}

}  // namespace pooled
