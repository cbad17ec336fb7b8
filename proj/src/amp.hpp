#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "model.hpp"
#include "noise.hpp"

namespace pooled {

enum class Normalization {
  None,            // raw multiplicities
  CenteredScaled,  // column-centred, unit expected column norm
};

inline constexpr std::size_t kDefaultMatrixBudgetBytes = std::size_t{1} << 30;

// Dense m x n design matrix, row-major. For CenteredScaled the entries are
// (A - 1 colmean^T) / scale, i.e. P A / scale with P = I - 11^T/m, and the
// query results must be passed through transform_results() before use.
class DesignMatrix {
 public:
  DesignMatrix() = default;
  DesignMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries,
               Normalization normalization = Normalization::None, double scale = 1.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Normalization normalization() const { return normalization_; }
  double scale() const { return scale_; }
  double at(std::size_t row, std::size_t col) const { return entries_[row * cols_ + col]; }
  std::span<const double> entries() const { return entries_; }

  std::vector<double> transform_results(std::span<const double> results) const;

  // out = A x; rows summed left to right.
  void multiply(std::span<const double> x, std::span<double> out) const;
  // out = A^T z; accumulated row by row in row order.
  void multiply_transposed(std::span<const double> z, std::span<double> out) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
  Normalization normalization_ = Normalization::None;
  double scale_ = 1.0;
};

DesignMatrix build_design_matrix(const PoolingGraph& graph, Normalization normalization,
                                 std::size_t budget_bytes = kDefaultMatrixBudgetBytes);

struct Denoiser {
  enum class Kind { SoftThreshold, BayesBernoulli, Identity };

  Kind kind = Kind::BayesBernoulli;
  // SoftThreshold: fixed threshold, or alpha * effective noise std when alpha > 0.
  double threshold = 0.0;
  double threshold_alpha = 0.0;
  // BayesBernoulli: prior probability of a one.
  double prior = 0.5;

  static Denoiser soft_threshold(double tau) { return {Kind::SoftThreshold, tau, 0.0, 0.5}; }
  static Denoiser soft_threshold_scaled(double alpha) { return {Kind::SoftThreshold, 0.0, alpha, 0.5}; }
  static Denoiser bayes_bernoulli(double prior) { return {Kind::BayesBernoulli, 0.0, 0.0, prior}; }
  static Denoiser identity() { return {Kind::Identity, 0.0, 0.0, 0.5}; }
};

struct DenoiseContext {
  std::uint64_t iteration = 0;
  double noise_variance = 1.0;  // effective noise estimate |z|^2 / m
};

struct DenoiseValue {
  double value = 0.0;
  double derivative = 0.0;
};

DenoiseValue denoise(const Denoiser& denoiser, double x, const DenoiseContext& context);

struct AmpState {
  std::vector<double> sigma;     // current estimate sigma^(t)
  std::vector<double> residual;  // z^(t)
  std::uint64_t iteration = 0;
  double onsager = 0.0;          // (1/m) sum eta'_{t-1}(...) used in z^(t); 0 at t = 0
};

// sigma^(0) = 0, z^(0) = results.
AmpState amp_initial_state(const DesignMatrix& matrix, std::span<const double> results);

// sigma^(t+1) = eta_t(A^T z^(t) + sigma^(t))
// z^(t+1)     = results - A sigma^(t+1) + onsager_{t+1} * z^(t)
// Throws ErrorCode::Divergence on non-finite values.
AmpState amp_step(const AmpState& state, const DesignMatrix& matrix, std::span<const double> results,
                  const Denoiser& denoiser, bool onsager_correction = true);

struct AmpOptions {
  std::uint64_t max_iters = 200;
  double tol = 1e-6;
  bool onsager_correction = true;
};

struct AmpOutcome {
  std::vector<std::uint8_t> bits;       // top-k coordinates of sigma, ties by index
  std::vector<double> sigma;
  std::vector<double> residual_norms;   // |z^(t)|_2 after each iteration
  std::uint64_t iterations = 0;
  bool converged = false;
  double separation_margin = 0.0;       // k-th minus (k+1)-th largest sigma
};

AmpOutcome amp_run(const DesignMatrix& matrix, std::span<const double> results, std::uint64_t k,
                   const Denoiser& denoiser, const AmpOptions& options = {});

struct AmpConfig {
  Normalization normalization = Normalization::CenteredScaled;
  // When unset, BayesBernoulli with prior k/n.
  bool use_soft_threshold = false;
  double soft_threshold_alpha = 1.5;
  AmpOptions options;
  std::size_t budget_bytes = kDefaultMatrixBudgetBytes;
};

AmpOutcome amp_reconstruct(const PoolingGraph& graph, const QueryResults& results, std::uint64_t k,
                           const AmpConfig& config = {});

}  // namespace pooled
