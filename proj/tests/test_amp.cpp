#include <cmath>
#include <numeric>
#include <vector>

#include "amp.hpp"
#include "doctest.h"
#include "error.hpp"
#include "fixtures.hpp"
#include "greedy.hpp"
#include "model.hpp"
#include "noise.hpp"

using namespace pooled;

TEST_CASE("raw design matrix of the small graph") {
  const auto A = build_design_matrix(fixtures::small_graph(), Normalization::None);
  REQUIRE(A.rows() == 5);
  REQUIRE(A.cols() == 7);
  const std::vector<double> a3{0, 2, 1, 0, 0, 0, 1};
  for (std::size_t i = 0; i < 7; ++i) CHECK(A.at(2, i) == a3[i]);
  for (std::size_t j = 0; j < 5; ++j) {
    double row = 0.0;
    for (std::size_t i = 0; i < 7; ++i) row += A.at(j, i);
    CHECK(row == 4.0);
  }
}

TEST_CASE("centred matrix has zero column sums and unit scale on average") {
  const auto config = ProblemConfig::from_regime(400, Regime::sublinear(0.25), 300);
  const auto g = sample_pooling_graph(config, RngHandle{1, 1});
  const auto A = build_design_matrix(g, Normalization::CenteredScaled);
  double total_sq = 0.0;
  for (std::size_t i = 0; i < A.cols(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < A.rows(); ++j) {
      sum += A.at(j, i);
      total_sq += A.at(j, i) * A.at(j, i);
    }
    CHECK(std::fabs(sum) < 1e-9);
  }
  CHECK(total_sq / static_cast<double>(A.cols()) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("first step is the denoised back-projection") {
  const auto g = fixtures::small_graph();
  const auto results = measure(g, fixtures::small_truth(), ExactModel{}, RngHandle{0, 0});
  const auto A = build_design_matrix(g, Normalization::None);

  // A^T y from the draw lists: repeated draws count repeatedly.
  std::vector<double> back(7, 0.0);
  for (std::size_t j = 0; j < g.queries(); ++j) {
    for (AgentIndex a : g.draws(j)) back[a] += results.values[j];
  }
  CHECK(back == std::vector<double>{5, 4, 6, 4, 5, 4, 4});

  const Denoiser denoisers[] = {Denoiser::bayes_bernoulli(3.0 / 7.0), Denoiser::soft_threshold(4.5),
                                Denoiser::soft_threshold_scaled(1.2), Denoiser::identity()};
  for (const auto& denoiser : denoisers) {
    const auto state = amp_initial_state(A, results.values);
    const auto next = amp_step(state, A, results.values, denoiser);
    DenoiseContext context;
    context.noise_variance = (4.0 + 9.0 + 1.0 + 1.0 + 1.0) / 5.0;
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(std::fabs(next.sigma[i] - denoise(denoiser, back[i], context).value) <= 1e-10);
    }
    CHECK(next.iteration == 1);
  }
}

TEST_CASE("denoiser derivatives match central differences") {
  Rng rng(RngHandle{6, 6});
  const double h = 1e-6;
  const Denoiser denoisers[] = {Denoiser::bayes_bernoulli(0.01), Denoiser::bayes_bernoulli(0.3),
                                Denoiser::soft_threshold(0.7), Denoiser::soft_threshold_scaled(1.5)};
  for (const auto& denoiser : denoisers) {
    int checked = 0;
    while (checked < 100) {
      DenoiseContext context;
      context.noise_variance = 0.05 + 2.0 * rng.uniform01();
      const double x = -3.0 + 6.0 * rng.uniform01();
      if (denoiser.kind == Denoiser::Kind::SoftThreshold) {
        const double tau = denoiser.threshold_alpha > 0.0 ? denoiser.threshold_alpha * std::sqrt(context.noise_variance)
                                                          : denoiser.threshold;
        if (std::fabs(std::fabs(x) - tau) < 1e-3) continue;
      }
      const double numeric =
          (denoise(denoiser, x + h, context).value - denoise(denoiser, x - h, context).value) / (2.0 * h);
      CHECK(std::fabs(numeric - denoise(denoiser, x, context).derivative) <= 1e-5);
      ++checked;
    }
  }
}

TEST_CASE("soft threshold shape") {
  const auto eta = Denoiser::soft_threshold(1.0);
  const DenoiseContext context;
  CHECK(denoise(eta, 0.5, context).value == 0.0);
  CHECK(denoise(eta, -0.5, context).derivative == 0.0);
  CHECK(denoise(eta, 3.0, context).value == 2.0);
  CHECK(denoise(eta, -3.0, context).value == -2.0);
  CHECK(denoise(eta, -3.0, context).derivative == 1.0);
}

TEST_CASE("identity denoiser without correction is Landweber") {
  // Well-conditioned 5 x 5 system, singular values well inside (0, sqrt 2).
  const std::vector<double> entries{0.8, 0.1, 0.0, 0.05, 0.0,  //
                                    0.1, 0.7, 0.1, 0.0, 0.0,   //
                                    0.0, 0.1, 0.9, 0.1, 0.05,  //
                                    0.05, 0.0, 0.1, 0.6, 0.1,  //
                                    0.0, 0.0, 0.05, 0.1, 0.75};
  const DesignMatrix A(5, 5, entries);
  const std::vector<double> y{1.0, -2.0, 0.5, 3.0, -1.0};

  AmpOptions options;
  options.onsager_correction = false;
  options.max_iters = 5000;
  options.tol = 1e-12;
  const auto outcome = amp_run(A, y, 2, Denoiser::identity(), options);
  CHECK(outcome.converged);

  std::vector<double> residual(5), normal(5);
  A.multiply(outcome.sigma, residual);
  for (std::size_t j = 0; j < 5; ++j) residual[j] = y[j] - residual[j];
  A.multiply_transposed(residual, normal);
  for (double v : normal) CHECK(std::fabs(v) < 1e-6);

  // The step itself: sigma + A^T (y - A sigma).
  AmpState state = amp_initial_state(A, y);
  state = amp_step(state, A, y, Denoiser::identity(), false);
  std::vector<double> at_y(5);
  A.multiply_transposed(y, at_y);
  for (std::size_t i = 0; i < 5; ++i) CHECK(state.sigma[i] == doctest::Approx(at_y[i]).epsilon(1e-14));
  CHECK(state.onsager == 0.0);
}

TEST_CASE("amp_step is pure") {
  const auto config = ProblemConfig::from_regime(200, Regime::sublinear(0.3), 80);
  const auto truth = sample_ground_truth(config, RngHandle{2, 0});
  const auto g = sample_pooling_graph(config, RngHandle{2, 1});
  const auto A = build_design_matrix(g, Normalization::CenteredScaled);
  const auto y = A.transform_results(measure(g, truth, ExactModel{}, RngHandle{2, 2}).values);
  const auto denoiser = Denoiser::bayes_bernoulli(static_cast<double>(config.k) / config.n);
  AmpState state = amp_initial_state(A, y);
  for (int t = 0; t < 4; ++t) {
    const auto a = amp_step(state, A, y, denoiser);
    const auto b = amp_step(state, A, y, denoiser);
    CHECK(a.sigma == b.sigma);
    CHECK(a.residual == b.residual);
    CHECK(a.onsager == b.onsager);
    CHECK(a.onsager >= 0.0);
    if (t == 0) CHECK(a.onsager > 0.0);
    state = a;
  }
}

TEST_CASE("amp output weight is k and noiseless recovery works") {
  int exact = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto config = ProblemConfig::from_regime(300, Regime::sublinear(0.25), 150);
    const auto truth = sample_ground_truth(config, RngHandle{s, 0});
    const auto g = sample_pooling_graph(config, RngHandle{s, 1});
    const auto results = measure(g, truth, ExactModel{}, RngHandle{s, 2});
    for (bool soft : {false, true}) {
      AmpConfig amp;
      amp.use_soft_threshold = soft;
      const auto outcome = amp_reconstruct(g, results, config.k, amp);
      CHECK(std::accumulate(outcome.bits.begin(), outcome.bits.end(), 0u) == config.k);
      CHECK(outcome.iterations >= 1);
      CHECK(outcome.residual_norms.size() == outcome.iterations);
      if (!soft) exact += outcome.bits == std::vector<std::uint8_t>(truth.bits().begin(), truth.bits().end());
    }
  }
  CHECK(exact >= 9);
}

TEST_CASE("matrix budget and divergence are reported") {
  const auto config = ProblemConfig::from_regime(1000, Regime::sublinear(0.25), 100);
  const auto g = sample_pooling_graph(config, RngHandle{3, 3});
  try {
    build_design_matrix(g, Normalization::None, 1000);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Resource);
  }

  const DesignMatrix A(1, 1, {10.0});
  const std::vector<double> y{1.0};
  AmpOptions options;
  options.onsager_correction = false;
  options.max_iters = 10000;
  try {
    amp_run(A, y, 1, Denoiser::identity(), options);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Divergence);
  }
}
