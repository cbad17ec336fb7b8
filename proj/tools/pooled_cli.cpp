// Command-line front end. Talks to the library only through the C API.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pooled/pooled.h"

namespace {

constexpr int kExitInvalidConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitNotTerminated = 3;

int exit_code(pooled_status status) {
  switch (status) {
    case POOLED_OK: return 0;
    case POOLED_ERR_IO: return kExitIo;
    case POOLED_ERR_NOT_TERMINATED: return kExitNotTerminated;
    default: return kExitInvalidConfig;
  }
}

int report(pooled_status status) {
  if (status != POOLED_OK) {
    std::cerr << "error: " << pooled_status_name(status);
    const std::string detail = pooled_last_error();
    if (!detail.empty()) std::cerr << ": " << detail;
    std::cerr << '\n';
  }
  return exit_code(status);
}

struct CommonOptions {
  std::vector<std::uint64_t> n;
  std::vector<double> theta;
  std::vector<double> zeta;
  std::string model = "none";
  std::vector<double> p;
  std::vector<double> q;
  std::vector<double> lambda;
  std::vector<std::uint64_t> m;
  std::string m_grid;
  std::uint64_t trials = 100;
  std::uint64_t seed = 1;
  std::string algo = "greedy";
  std::string out;
  unsigned workers = 1;
  bool oracle = false;
  bool timing = false;
  double eps = 0.05;
  std::uint64_t stride = 1;
  double cap_factor = 50.0;
};

void add_grid_options(CLI::App& app, CommonOptions& o, bool with_m) {
  app.add_option("--n", o.n, "Agent counts")->delimiter(',');
  auto* theta = app.add_option("--theta", o.theta, "Sublinear exponents, k = round(n^theta)")->delimiter(',');
  auto* zeta = app.add_option("--zeta", o.zeta, "Linear densities, k = round(zeta n)")->delimiter(',');
  theta->excludes(zeta);
  app.add_option("--model", o.model, "Noise model")->check(CLI::IsMember({"none", "z", "gnc", "gauss"}));
  app.add_option("--p", o.p, "False-negative probabilities")->delimiter(',');
  app.add_option("--q", o.q, "False-positive probabilities")->delimiter(',');
  app.add_option("--lambda", o.lambda, "Query noise standard deviations")->delimiter(',');
  app.add_option("--eps", o.eps, "Slack of the reported bound");
  if (with_m) {
    app.add_option("--m", o.m, "Query counts")->delimiter(',');
    app.add_option("--m-grid", o.m_grid, "Query grid start:step:stop");
  }
}

void add_run_options(CLI::App& app, CommonOptions& o) {
  app.add_option("--trials", o.trials, "Trials per grid point")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--algo", o.algo, "Reconstruction algorithm")->check(CLI::IsMember({"greedy", "amp", "both"}));
  app.add_option("--out", o.out, "CSV output path (plot-data files go next to it)");
  app.add_option("--workers", o.workers, "Worker threads");
  app.add_flag("--oracle", o.oracle, "Check the neighbourhood-sum decomposition on every trial");
  app.add_flag("--timing", o.timing, "Record wall-clock elapsed_ms");
}

std::vector<std::uint64_t> parse_m_grid(const std::string& grid) {
  std::uint64_t start = 0, step = 0, stop = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(grid);
  if (!(in >> start >> c1 >> step >> c2 >> stop) || c1 != ':' || c2 != ':' || step == 0 || stop < start) {
    throw CLI::ValidationError("--m-grid", "expected start:step:stop with step > 0");
  }
  std::vector<std::uint64_t> out;
  for (std::uint64_t m = start; m <= stop; m += step) out.push_back(m);
  return out;
}

std::vector<pooled_noise> noises_from(const CommonOptions& o) {
  auto or_default = [](const std::vector<double>& v, double fallback) {
    return v.empty() ? std::vector<double>{fallback} : v;
  };
  std::vector<pooled_noise> noises;
  if (o.model == "none") {
    noises.push_back({POOLED_MODEL_NONE, 0.0, 0.0, 0.0});
  } else if (o.model == "z") {
    for (double p : or_default(o.p, 0.0)) noises.push_back({POOLED_MODEL_Z, p, 0.0, 0.0});
  } else if (o.model == "gnc") {
    for (double p : or_default(o.p, 0.0)) {
      for (double q : or_default(o.q, 0.0)) noises.push_back({POOLED_MODEL_GNC, p, q, 0.0});
    }
  } else {
    for (double lambda : or_default(o.lambda, 0.0)) noises.push_back({POOLED_MODEL_GAUSS, 0.0, 0.0, lambda});
  }
  return noises;
}

pooled_algorithm algorithm_from(const std::string& name) {
  if (name == "amp") return POOLED_ALGO_AMP;
  if (name == "both") return POOLED_ALGO_BOTH;
  return POOLED_ALGO_GREEDY;
}

class Experiment {
 public:
  explicit Experiment(pooled_experiment* handle) : handle_(handle) {}
  ~Experiment() { pooled_experiment_destroy(handle_); }
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;
  pooled_experiment* get() const { return handle_; }

 private:
  pooled_experiment* handle_;
};

pooled_status configure(pooled_experiment* e, const CommonOptions& o, bool with_m) {
  pooled_status s = POOLED_OK;
  auto step = [&s](pooled_status next) {
    if (s == POOLED_OK) s = next;
  };
  step(pooled_experiment_set_ns(e, o.n.data(), o.n.size()));
  if (!o.zeta.empty()) {
    step(pooled_experiment_set_regimes(e, POOLED_REGIME_LINEAR, o.zeta.data(), o.zeta.size()));
  } else {
    const std::vector<double> theta = o.theta.empty() ? std::vector<double>{0.25} : o.theta;
    step(pooled_experiment_set_regimes(e, POOLED_REGIME_SUBLINEAR, theta.data(), theta.size()));
  }
  const auto noises = noises_from(o);
  step(pooled_experiment_set_noises(e, noises.data(), noises.size()));
  if (with_m) {
    std::vector<std::uint64_t> ms = o.m;
    if (!o.m_grid.empty()) {
      const auto grid = parse_m_grid(o.m_grid);
      ms.insert(ms.end(), grid.begin(), grid.end());
    }
    step(pooled_experiment_set_m_values(e, ms.data(), ms.size()));
  }
  step(pooled_experiment_set_trials(e, o.trials));
  step(pooled_experiment_set_seed(e, o.seed));
  step(pooled_experiment_set_eps(e, o.eps));
  step(pooled_experiment_set_workers(e, o.workers));
  step(pooled_experiment_set_oracle(e, o.oracle));
  step(pooled_experiment_set_timing(e, o.timing));
  step(pooled_experiment_set_output(e, o.out.empty() ? nullptr : o.out.c_str()));
  return s;
}

int run_and_print(pooled_experiment* e, const std::string& out) {
  const pooled_status status = pooled_experiment_run(e);
  if (status != POOLED_OK && status != POOLED_ERR_NOT_TERMINATED) return report(status);
  if (out.empty()) {
    std::cout << pooled_experiment_csv(e);
  } else {
    std::cout << "wrote " << pooled_experiment_row_count(e) << " rows\n";
    for (std::size_t i = 0; i < pooled_experiment_file_count(e); ++i) {
      std::cout << "  " << pooled_experiment_file(e, i) << '\n';
    }
  }
  for (std::size_t i = 0; i < pooled_experiment_window_count(e); ++i) {
    char label[256];
    int defined = 0;
    double m10 = 0.0, m90 = 0.0;
    if (pooled_experiment_get_window(e, i, label, sizeof label, &defined, &m10, &m90) != POOLED_OK) continue;
    std::cerr << "window " << label << ": ";
    if (defined) {
      std::cerr << "m10=" << m10 << " m90=" << m90 << " width=" << (m90 - m10) << '\n';
    } else {
      std::cerr << "undefined (never reaches 0.9)\n";
    }
  }
  return report(status);
}

int run_threshold(const CommonOptions& o, const std::optional<std::uint64_t>& m, double c_safe, double c_fail) {
  const auto noises = noises_from(o);
  const bool linear = !o.zeta.empty();
  const std::vector<double> params = linear ? o.zeta : (o.theta.empty() ? std::vector<double>{0.25} : o.theta);
  std::printf("n,regime,model,p,q,lambda,eps,bound_value,bound_m\n");
  for (std::uint64_t n : o.n) {
    for (double param : params) {
      for (const auto& noise : noises) {
        pooled_threshold_query query{n, linear ? POOLED_REGIME_LINEAR : POOLED_REGIME_SUBLINEAR, param, noise, o.eps};
        std::uint64_t bound = 0;
        double value = 0.0;
        const pooled_status status = pooled_required_queries_bound(&query, &bound, &value);
        if (status != POOLED_OK) return report(status);
        std::printf("%llu,%s(%g),%s,%g,%g,%g,%g,%.6f,%llu\n", static_cast<unsigned long long>(n),
                    linear ? "linear" : "sublinear", param, o.model.c_str(), noise.p, noise.q, noise.lambda, o.eps,
                    value, static_cast<unsigned long long>(bound));
        if (noise.kind == POOLED_MODEL_GAUSS && m) {
          pooled_feasibility feasibility = POOLED_INDETERMINATE;
          const pooled_status fs = pooled_noisy_query_feasibility(*m, n, noise.lambda, c_safe, c_fail, &feasibility);
          if (fs != POOLED_OK) return report(fs);
          static const char* names[] = {"achievable", "failing", "indeterminate"};
          std::printf("# feasibility at m=%llu lambda=%g: %s\n", static_cast<unsigned long long>(*m), noise.lambda,
                      names[feasibility]);
        }
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy pooled data: thresholds, greedy and AMP reconstruction experiments"};
  app.require_subcommand(1);

  CommonOptions threshold_opts;
  std::uint64_t threshold_m = 0;
  double c_safe = 1.0;
  double c_fail = 1.0;
  auto* threshold = app.add_subcommand("threshold", "Print the sufficient number of queries");
  add_grid_options(*threshold, threshold_opts, false);
  auto* threshold_m_opt = threshold->add_option("--m", threshold_m, "Query count for the noisy-query feasibility check");
  threshold->add_option("--c-safe", c_safe, "Achievability constant")->check(CLI::PositiveNumber);
  threshold->add_option("--c-fail", c_fail, "Failure constant")->check(CLI::PositiveNumber);

  CommonOptions required_opts;
  auto* required = app.add_subcommand("required", "Queries needed until exact separated recovery");
  add_grid_options(*required, required_opts, false);
  add_run_options(*required, required_opts);
  required->add_option("--stride", required_opts.stride, "Query step before backtracking")->check(CLI::PositiveNumber);
  required->add_option("--cap-factor", required_opts.cap_factor, "Give up after this multiple of the bound");

  CommonOptions success_opts;
  auto* success = app.add_subcommand("success", "Exact-recovery rate at fixed m");
  add_grid_options(*success, success_opts, true);
  add_run_options(*success, success_opts);

  CommonOptions overlap_opts;
  auto* overlap = app.add_subcommand("overlap", "Mean overlap at fixed m");
  add_grid_options(*overlap, overlap_opts, true);
  add_run_options(*overlap, overlap_opts);

  CommonOptions compare_opts;
  compare_opts.algo = "both";
  auto* compare = app.add_subcommand("amp-compare", "Greedy vs AMP on the same instances");
  add_grid_options(*compare, compare_opts, true);
  add_run_options(*compare, compare_opts);

  int figure = 5;
  std::uint64_t max_n = 10000;
  CommonOptions repro_opts;
  auto* repro = app.add_subcommand("repro", "Figure presets");
  repro->add_option("--figure", figure, "Figure number")->required()->check(CLI::Range(2, 6));
  repro->add_option("--max-n", max_n, "Drop grid points with larger n");
  auto* repro_trials = repro->add_option("--trials", repro_opts.trials, "Trials per grid point")->check(CLI::PositiveNumber);
  auto* repro_seed = repro->add_option("--seed", repro_opts.seed, "Master seed");
  auto* repro_eps = repro->add_option("--eps", repro_opts.eps, "Slack of the reported bound");
  auto* repro_algo = repro->add_option("--algo", repro_opts.algo, "Reconstruction algorithm")
                         ->check(CLI::IsMember({"greedy", "amp", "both"}));
  repro->add_option("--out", repro_opts.out, "CSV output path");
  repro->add_option("--workers", repro_opts.workers, "Worker threads");
  repro->add_flag("--oracle", repro_opts.oracle, "Check the neighbourhood-sum decomposition");
  repro->add_flag("--timing", repro_opts.timing, "Record wall-clock elapsed_ms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalidConfig;
  }

  try {
    if (*threshold) {
      if (threshold_opts.n.empty()) {
        std::cerr << "error: threshold needs --n\n";
        return kExitInvalidConfig;
      }
      std::optional<std::uint64_t> m;
      if (threshold_m_opt->count()) m = threshold_m;
      return run_threshold(threshold_opts, m, c_safe, c_fail);
    }

    struct Mode {
      CLI::App* command;
      CommonOptions* options;
      pooled_experiment_kind kind;
      bool with_m;
    };
    const Mode modes[] = {
        {required, &required_opts, POOLED_EXP_REQUIRED, false},
        {success, &success_opts, POOLED_EXP_SUCCESS, true},
        {overlap, &overlap_opts, POOLED_EXP_OVERLAP, true},
        {compare, &compare_opts, POOLED_EXP_AMP_COMPARE, true},
    };
    for (const auto& mode : modes) {
      if (!*mode.command) continue;
      pooled_experiment* handle = nullptr;
      if (pooled_status s = pooled_experiment_create(mode.kind, &handle); s != POOLED_OK) return report(s);
      Experiment experiment(handle);
      if (pooled_status s = configure(handle, *mode.options, mode.with_m); s != POOLED_OK) return report(s);
      pooled_status s = pooled_experiment_set_algorithm(handle, algorithm_from(mode.options->algo));
      if (s == POOLED_OK && mode.kind == POOLED_EXP_REQUIRED) {
        s = pooled_experiment_set_stride(handle, mode.options->stride);
        if (s == POOLED_OK) s = pooled_experiment_set_cap_factor(handle, mode.options->cap_factor);
      }
      if (s != POOLED_OK) return report(s);
      return run_and_print(handle, mode.options->out);
    }

    pooled_experiment* handle = nullptr;
    if (pooled_status s = pooled_experiment_create_preset(figure, max_n, &handle); s != POOLED_OK) return report(s);
    Experiment experiment(handle);
    pooled_status s = POOLED_OK;
    if (repro_trials->count()) s = pooled_experiment_set_trials(handle, repro_opts.trials);
    if (s == POOLED_OK && repro_seed->count()) s = pooled_experiment_set_seed(handle, repro_opts.seed);
    if (s == POOLED_OK && repro_eps->count()) s = pooled_experiment_set_eps(handle, repro_opts.eps);
    if (s == POOLED_OK && repro_algo->count()) s = pooled_experiment_set_algorithm(handle, algorithm_from(repro_opts.algo));
    if (s == POOLED_OK) s = pooled_experiment_set_workers(handle, repro_opts.workers);
    if (s == POOLED_OK) s = pooled_experiment_set_oracle(handle, repro_opts.oracle);
    if (s == POOLED_OK) s = pooled_experiment_set_timing(handle, repro_opts.timing);
    if (s == POOLED_OK) s = pooled_experiment_set_output(handle, repro_opts.out.empty() ? nullptr : repro_opts.out.c_str());
    if (s != POOLED_OK) return report(s);
    return run_and_print(handle, repro_opts.out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalidConfig;
  }
}
