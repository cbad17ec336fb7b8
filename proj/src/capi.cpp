#include <algorithm>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "amp.hpp"
#include "error.hpp"
#include "greedy.hpp"
#include "harness.hpp"
#include "model.hpp"
#include "noise.hpp"
#include "pooled/pooled.h"
#include "theory.hpp"

struct pooled_instance {
  pooled::ProblemConfig config;
  pooled::GroundTruth truth;
  pooled::PoolingGraph graph;
  pooled::QueryResults results;
};

struct pooled_experiment {
  pooled::ExperimentSpec spec;
  pooled::ExperimentResult result;
  std::string csv;
};

namespace {

std::string& last_error() {
  thread_local std::string message;
  return message;
}

pooled_status to_status(pooled::ErrorCode code) {
  using pooled::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidConfig: return POOLED_ERR_INVALID_CONFIG;
    case ErrorCode::InvalidInput: return POOLED_ERR_INVALID_INPUT;
    case ErrorCode::EmptyGraph: return POOLED_ERR_EMPTY_GRAPH;
    case ErrorCode::Resource: return POOLED_ERR_RESOURCE;
    case ErrorCode::Divergence: return POOLED_ERR_DIVERGENCE;
    case ErrorCode::WindowUndefined: return POOLED_ERR_WINDOW_UNDEFINED;
    case ErrorCode::Io: return POOLED_ERR_IO;
    case ErrorCode::NotTerminated: return POOLED_ERR_NOT_TERMINATED;
  }
  return POOLED_ERR_INTERNAL;
}

template <class Body>
pooled_status guarded(Body&& body) {
  try {
    last_error().clear();
    return body();
  } catch (const pooled::Error& e) {
    last_error() = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error() = "out of memory";
    return POOLED_ERR_RESOURCE;
  } catch (const std::exception& e) {
    last_error() = e.what();
    return POOLED_ERR_INTERNAL;
  } catch (...) {
    last_error() = "unknown error";
    return POOLED_ERR_INTERNAL;
  }
}

#define POOLED_REQUIRE_ARG(ptr)                                   \
  do {                                                            \
    if ((ptr) == nullptr) {                                       \
      last_error() = "null argument: " #ptr;                      \
      return POOLED_ERR_NULL_ARGUMENT;                            \
    }                                                             \
  } while (0)

pooled::NoiseModel to_model(const pooled_noise* noise) {
  if (noise == nullptr) return pooled::ExactModel{};
  switch (noise->kind) {
    case POOLED_MODEL_NONE: return pooled::ExactModel{};
    case POOLED_MODEL_Z:
      pooled::require(noise->q == 0.0, pooled::ErrorCode::InvalidConfig, "Z-channel requires q = 0");
      return pooled::NoisyChannel{noise->p, 0.0};
    case POOLED_MODEL_GNC: return pooled::NoisyChannel{noise->p, noise->q};
    case POOLED_MODEL_GAUSS: return pooled::NoisyQuery{noise->lambda};
  }
  pooled::fail(pooled::ErrorCode::InvalidConfig, "unknown noise model");
}

pooled::Regime to_regime(pooled_regime_kind kind, double param) {
  switch (kind) {
    case POOLED_REGIME_SUBLINEAR: return pooled::Regime::sublinear(param);
    case POOLED_REGIME_LINEAR: return pooled::Regime::linear(param);
  }
  pooled::fail(pooled::ErrorCode::InvalidConfig, "unknown regime");
}

void copy_string(char* dst, std::size_t capacity, const std::string& src) {
  if (capacity == 0) return;
  const std::size_t n = std::min(capacity - 1, src.size());
  std::memcpy(dst, src.data(), n);
  dst[n] = '\0';
}

pooled_status fill_evaluation(const pooled::Evaluation& eval, double margin, pooled_evaluation* out) {
  if (out) {
    out->exact = eval.exact ? 1 : 0;
    out->overlap = eval.overlap;
    out->separation_margin = margin;
  }
  return POOLED_OK;
}

}  // namespace

extern "C" {

POOLED_API const char* pooled_version(void) { return "1.0.0"; }

POOLED_API const char* pooled_status_name(pooled_status status) {
  switch (status) {
    case POOLED_OK: return "ok";
    case POOLED_ERR_INVALID_CONFIG: return "invalid configuration";
    case POOLED_ERR_IO: return "I/O failure";
    case POOLED_ERR_NOT_TERMINATED: return "query cap reached";
    case POOLED_ERR_INVALID_INPUT: return "invalid input";
    case POOLED_ERR_EMPTY_GRAPH: return "empty graph";
    case POOLED_ERR_RESOURCE: return "resource limit";
    case POOLED_ERR_DIVERGENCE: return "divergence";
    case POOLED_ERR_WINDOW_UNDEFINED: return "transition window undefined";
    case POOLED_ERR_NULL_ARGUMENT: return "null argument";
    case POOLED_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

POOLED_API const char* pooled_last_error(void) { return last_error().c_str(); }

POOLED_API const char* pooled_csv_header(void) { return pooled::kCsvHeader.data(); }

POOLED_API double pooled_gamma_constant(void) { return pooled::gamma_constant(); }

POOLED_API pooled_status pooled_required_queries_bound(const pooled_threshold_query* query, uint64_t* m,
                                                       double* value) {
  POOLED_REQUIRE_ARG(query);
  POOLED_REQUIRE_ARG(m);
  return guarded([&] {
    pooled::ThresholdQuery q;
    q.n = query->n;
    q.regime = to_regime(query->regime, query->regime_param);
    q.eps = query->eps;
    q.p = query->noise.p;
    q.q = query->noise.q;
    q.lambda = query->noise.lambda;
    switch (query->noise.kind) {
      case POOLED_MODEL_NONE: q.channel = pooled::ChannelKind::Noiseless; break;
      case POOLED_MODEL_Z: q.channel = pooled::ChannelKind::Z; break;
      case POOLED_MODEL_GNC: q.channel = pooled::ChannelKind::General; break;
      case POOLED_MODEL_GAUSS: q.channel = pooled::ChannelKind::NoisyQuery; break;
      default: pooled::fail(pooled::ErrorCode::InvalidConfig, "unknown noise model");
    }
    const double exact = pooled::required_queries_value(q);
    *m = pooled::required_queries_bound(q);
    if (value) *value = exact;
    return POOLED_OK;
  });
}

POOLED_API pooled_status pooled_noisy_query_feasibility(uint64_t m, uint64_t n, double lambda, double c_safe,
                                                        double c_fail, pooled_feasibility* out) {
  POOLED_REQUIRE_ARG(out);
  return guarded([&] {
    switch (pooled::noisy_query_feasibility(m, n, lambda, c_safe, c_fail)) {
      case pooled::Feasibility::Achievable: *out = POOLED_ACHIEVABLE; break;
      case pooled::Feasibility::Failing: *out = POOLED_FAILING; break;
      case pooled::Feasibility::Indeterminate: *out = POOLED_INDETERMINATE; break;
    }
    return POOLED_OK;
  });
}

POOLED_API pooled_status pooled_instance_sample(uint64_t n, uint64_t k, uint64_t m, uint64_t gamma,
                                                const pooled_noise* noise, uint64_t seed, uint64_t stream,
                                                pooled_instance** out) {
  POOLED_REQUIRE_ARG(out);
  return guarded([&] {
    auto instance = std::make_unique<pooled_instance>();
    instance->config.n = n;
    instance->config.k = k;
    instance->config.m = m;
    instance->config.gamma = gamma ? gamma : pooled::default_query_size(n);
    instance->config.validate();
    const pooled::NoiseModel model = to_model(noise);
    pooled::validate(model);
    pooled::Rng rng({seed, stream});
    instance->truth = pooled::sample_ground_truth(instance->config, rng);
    instance->graph = pooled::sample_pooling_graph(instance->config, rng);
    instance->results = pooled::measure(instance->graph, instance->truth, model, rng);
    *out = instance.release();
    return POOLED_OK;
  });
}

POOLED_API pooled_status pooled_instance_create(uint64_t n, uint64_t gamma, uint64_t m, const uint32_t* draws,
                                                const uint8_t* truth, const pooled_noise* noise, uint64_t seed,
                                                uint64_t stream, pooled_instance** out) {
  POOLED_REQUIRE_ARG(out);
  POOLED_REQUIRE_ARG(truth);
  if (m > 0) POOLED_REQUIRE_ARG(draws);
  return guarded([&] {
    auto instance = std::make_unique<pooled_instance>();
    instance->graph = pooled::PoolingGraph(n, gamma, std::vector<pooled::AgentIndex>(draws, draws + m * gamma));
    instance->truth = pooled::GroundTruth(std::vector<std::uint8_t>(truth, truth + n));
    instance->config.n = n;
    instance->config.k = instance->truth.weight();
    instance->config.m = m;
    instance->config.gamma = gamma;
    pooled::Rng rng({seed, stream});
    instance->results = pooled::measure(instance->graph, instance->truth, to_model(noise), rng);
    *out = instance.release();
    return POOLED_OK;
  });
}

POOLED_API void pooled_instance_destroy(pooled_instance* instance) { delete instance; }

POOLED_API pooled_status pooled_instance_get_info(const pooled_instance* instance, pooled_instance_info* info) {
  POOLED_REQUIRE_ARG(instance);
  POOLED_REQUIRE_ARG(info);
  info->n = instance->config.n;
  info->k = instance->config.k;
  info->m = instance->graph.queries();
  info->gamma = instance->graph.query_size();
  return POOLED_OK;
}

POOLED_API pooled_status pooled_instance_get_results(const pooled_instance* instance, double* results,
                                                     size_t length) {
  POOLED_REQUIRE_ARG(instance);
  POOLED_REQUIRE_ARG(results);
  return guarded([&] {
    pooled::require(length == instance->results.values.size(), pooled::ErrorCode::InvalidInput,
                    "result buffer length must equal m");
    std::copy(instance->results.values.begin(), instance->results.values.end(), results);
    return POOLED_OK;
  });
}

POOLED_API pooled_status pooled_instance_get_degrees(const pooled_instance* instance, uint32_t* multi,
                                                     uint32_t* distinct, size_t length) {
  POOLED_REQUIRE_ARG(instance);
  return guarded([&] {
    pooled::require(length == instance->graph.agents(), pooled::ErrorCode::InvalidInput,
                    "degree buffer length must equal n");
    if (multi) std::copy(instance->graph.multi_degree().begin(), instance->graph.multi_degree().end(), multi);
    if (distinct) {
      std::copy(instance->graph.distinct_degree().begin(), instance->graph.distinct_degree().end(), distinct);
    }
    return POOLED_OK;
  });
}

POOLED_API pooled_status pooled_instance_write_graph(const pooled_instance* instance, const char* path) {
  POOLED_REQUIRE_ARG(instance);
  POOLED_REQUIRE_ARG(path);
  return guarded([&] {
    std::ofstream out(path);
    pooled::require(static_cast<bool>(out), pooled::ErrorCode::Io, std::string("cannot open ") + path);
    instance->graph.write_text(out);
    pooled::require(static_cast<bool>(out), pooled::ErrorCode::Io, std::string("failed writing ") + path);
    return POOLED_OK;
  });
}

POOLED_API pooled_status pooled_instance_greedy(const pooled_instance* instance, pooled_sort_method method,
                                                uint8_t* bits, double* scores, size_t length,
                                                pooled_evaluation* evaluation) {
  POOLED_REQUIRE_ARG(instance);
  return guarded([&] {
    pooled::require(length == instance->graph.agents() || (bits == nullptr && scores == nullptr),
                    pooled::ErrorCode::InvalidInput, "output buffer length must equal n");
    const auto k = instance->truth.weight();
    const auto table =
        pooled::compute_scores(pooled::neighborhood_sums(instance->graph, instance->results), instance->graph, k);
    const auto estimate = pooled::rank_and_declare(
        table, k, method == POOLED_SORT_BITONIC ? pooled::SortMethod::Bitonic : pooled::SortMethod::Comparison);
    if (bits) std::copy(estimate.bits.begin(), estimate.bits.end(), bits);
    if (scores) std::copy(table.score.begin(), table.score.end(), scores);
    return fill_evaluation(pooled::evaluate(estimate, instance->truth), estimate.separation_margin, evaluation);
  });
}

POOLED_API void pooled_amp_default_options(pooled_amp_options* options) {
  if (!options) return;
  const pooled::AmpConfig defaults;
  options->centered = defaults.normalization == pooled::Normalization::CenteredScaled;
  options->soft_threshold = defaults.use_soft_threshold;
  options->threshold_alpha = defaults.soft_threshold_alpha;
  options->max_iters = defaults.options.max_iters;
  options->tol = defaults.options.tol;
}

POOLED_API pooled_status pooled_instance_amp(const pooled_instance* instance, const pooled_amp_options* options,
                                             uint8_t* bits, size_t length, pooled_evaluation* evaluation,
                                             uint64_t* iterations) {
  POOLED_REQUIRE_ARG(instance);
  return guarded([&] {
    pooled::require(bits == nullptr || length == instance->graph.agents(), pooled::ErrorCode::InvalidInput,
                    "output buffer length must equal n");
    pooled::AmpConfig config;
    if (options) {
      config.normalization = options->centered ? pooled::Normalization::CenteredScaled : pooled::Normalization::None;
      config.use_soft_threshold = options->soft_threshold != 0;
      config.soft_threshold_alpha = options->threshold_alpha;
      config.options.max_iters = options->max_iters;
      config.options.tol = options->tol;
    }
    const auto outcome = pooled::amp_reconstruct(instance->graph, instance->results, instance->truth.weight(), config);
    if (bits) std::copy(outcome.bits.begin(), outcome.bits.end(), bits);
    if (iterations) *iterations = outcome.iterations;
    pooled::Estimate estimate;
    estimate.bits = outcome.bits;
    return fill_evaluation(pooled::evaluate(estimate, instance->truth), outcome.separation_margin, evaluation);
  });
}

POOLED_API pooled_status pooled_experiment_create(pooled_experiment_kind kind, pooled_experiment** out) {
  POOLED_REQUIRE_ARG(out);
  return guarded([&] {
    auto experiment = std::make_unique<pooled_experiment>();
    switch (kind) {
      case POOLED_EXP_REQUIRED: experiment->spec.kind = pooled::ExperimentKind::RequiredQueries; break;
      case POOLED_EXP_SUCCESS: experiment->spec.kind = pooled::ExperimentKind::SuccessRate; break;
      case POOLED_EXP_OVERLAP: experiment->spec.kind = pooled::ExperimentKind::Overlap; break;
      case POOLED_EXP_AMP_COMPARE:
        experiment->spec.kind = pooled::ExperimentKind::AmpCompare;
        experiment->spec.algorithm = pooled::Algorithm::Both;
        break;
      case POOLED_EXP_THRESHOLD_TABLE: experiment->spec.kind = pooled::ExperimentKind::ThresholdTable; break;
      default: pooled::fail(pooled::ErrorCode::InvalidConfig, "unknown experiment kind");
    }
    *out = experiment.release();
    return POOLED_OK;
  });
}

POOLED_API pooled_status pooled_experiment_create_preset(int figure, uint64_t max_n, pooled_experiment** out) {
  POOLED_REQUIRE_ARG(out);
  return guarded([&] {
    auto experiment = std::make_unique<pooled_experiment>();
    experiment->spec = pooled::figure_preset(figure, max_n);
    *out = experiment.release();
    return POOLED_OK;
  });
}

POOLED_API void pooled_experiment_destroy(pooled_experiment* experiment) { delete experiment; }

POOLED_API pooled_status pooled_experiment_set_ns(pooled_experiment* e, const uint64_t* ns, size_t count) {
  POOLED_REQUIRE_ARG(e);
  if (count) POOLED_REQUIRE_ARG(ns);
  e->spec.ns.assign(ns, ns + count);
  return POOLED_OK;
}

POOLED_API pooled_status pooled_experiment_set_regimes(pooled_experiment* e, pooled_regime_kind kind,
                                                       const double* params, size_t count) {
  POOLED_REQUIRE_ARG(e);
  if (count) POOLED_REQUIRE_ARG(params);
  return guarded([&] {
    std::vector<pooled::Regime> regimes;
    for (size_t i = 0; i < count; ++i) regimes.push_back(to_regime(kind, params[i]));
    e->spec.regimes = std::move(regimes);
    return POOLED_OK;
  });
}

POOLED_API pooled_status pooled_experiment_set_noises(pooled_experiment* e, const pooled_noise* noises,
                                                      size_t count) {
  POOLED_REQUIRE_ARG(e);
  if (count) POOLED_REQUIRE_ARG(noises);
  return guarded([&] {
    std::vector<pooled::NoiseModel> models;
    for (size_t i = 0; i < count; ++i) {
      models.push_back(to_model(&noises[i]));
      pooled::validate(models.back());
    }
    e->spec.models = std::move(models);
    return POOLED_OK;
  });
}

POOLED_API pooled_status pooled_experiment_set_m_values(pooled_experiment* e, const uint64_t* ms, size_t count) {
  POOLED_REQUIRE_ARG(e);
  if (count) POOLED_REQUIRE_ARG(ms);
  e->spec.m_values.assign(ms, ms + count);
  return POOLED_OK;
}

POOLED_API pooled_status pooled_experiment_set_trials(pooled_experiment* e, uint64_t trials) {
  POOLED_REQUIRE_ARG(e);
  if (trials == 0) {
    last_error() = "trials must be at least 1";
    return POOLED_ERR_INVALID_CONFIG;
  }
  e->spec.trials = trials;
  return POOLED_OK;
}

POOLED_API pooled_status pooled_experiment_set_seed(pooled_experiment* e, uint64_t seed) {
  POOLED_REQUIRE_ARG(e);
  e->spec.master_seed = seed;
  return POOLED_OK;
}

POOLED_API pooled_status pooled_experiment_set_algorithm(pooled_experiment* e, pooled_algorithm algorithm) {
  POOLED_REQUIRE_ARG(e);
  switch (algorithm) {
    case POOLED_ALGO_GREEDY: e->spec.algorithm = pooled::Algorithm::Greedy; return POOLED_OK;
    case POOLED_ALGO_AMP: e->spec.algorithm = pooled::Algorithm::Amp; return POOLED_OK;
    case POOLED_ALGO_BOTH: e->spec.algorithm = pooled::Algorithm::Both; return POOLED_OK;
  }
  last_error() = "unknown algorithm";
  return POOLED_ERR_INVALID_CONFIG;
}

POOLED_API pooled_status pooled_experiment_set_eps(pooled_experiment* e, double eps) {
  POOLED_REQUIRE_ARG(e);
  e->spec.eps = eps;
  return POOLED_OK;
}

POOLED_API pooled_status pooled_experiment_set_workers(pooled_experiment* e, unsigned workers) {
  POOLED_REQUIRE_ARG(e);
  e->spec.workers = workers == 0 ? 1 : workers;
  return POOLED_OK;
}

POOLED_API pooled_status pooled_experiment_set_oracle(pooled_experiment* e, int enabled) {
  POOLED_REQUIRE_ARG(e);
  e->spec.oracle = enabled != 0;
  return POOLED_OK;
}

POOLED_API pooled_status pooled_experiment_set_timing(pooled_experiment* e, int enabled) {
  POOLED_REQUIRE_ARG(e);
  e->spec.timing = enabled != 0;
  return POOLED_OK;
}

POOLED_API pooled_status pooled_experiment_set_stride(pooled_experiment* e, uint64_t stride) {
  POOLED_REQUIRE_ARG(e);
  e->spec.stride = stride;
  return POOLED_OK;
}

POOLED_API pooled_status pooled_experiment_set_cap_factor(pooled_experiment* e, double factor) {
  POOLED_REQUIRE_ARG(e);
  e->spec.cap_factor = factor;
  return POOLED_OK;
}

POOLED_API pooled_status pooled_experiment_set_output(pooled_experiment* e, const char* csv_path) {
  POOLED_REQUIRE_ARG(e);
  e->spec.output_path = csv_path ? csv_path : "";
  return POOLED_OK;
}

POOLED_API pooled_status pooled_experiment_run(pooled_experiment* e) {
  POOLED_REQUIRE_ARG(e);
  return guarded([&] {
    e->result = {};
    e->csv.clear();
    e->result = pooled::run_experiment(e->spec);
    std::ostringstream csv;
    pooled::write_csv(csv, e->result.rows);
    e->csv = csv.str();
    if (e->result.all_capped) {
      last_error() = "query cap reached on every grid point";
      return POOLED_ERR_NOT_TERMINATED;
    }
    return POOLED_OK;
  });
}

POOLED_API size_t pooled_experiment_row_count(const pooled_experiment* e) { return e ? e->result.rows.size() : 0; }

POOLED_API pooled_status pooled_experiment_get_row(const pooled_experiment* e, size_t index, pooled_result_row* row) {
  POOLED_REQUIRE_ARG(e);
  POOLED_REQUIRE_ARG(row);
  if (index >= e->result.rows.size()) {
    last_error() = "row index out of range";
    return POOLED_ERR_INVALID_INPUT;
  }
  const auto& r = e->result.rows[index];
  row->seed = r.seed;
  row->n = r.n;
  row->k = r.k;
  copy_string(row->regime, sizeof row->regime, r.regime);
  copy_string(row->model, sizeof row->model, r.model);
  row->p = r.p;
  row->q = r.q;
  row->lambda = r.lambda;
  copy_string(row->algorithm, sizeof row->algorithm, r.algorithm);
  row->m = r.m;
  row->trials = r.trials;
  row->successes = r.successes;
  row->mean_overlap = r.mean_overlap;
  row->separation_margin_mean = r.separation_margin_mean;
  row->elapsed_ms = r.elapsed_ms;
  row->flag = r.flag == pooled::RowFlag::Capped   ? POOLED_ROW_CAPPED
              : r.flag == pooled::RowFlag::Failed ? POOLED_ROW_FAILED
                                                  : POOLED_ROW_OK;
  return POOLED_OK;
}

POOLED_API const char* pooled_experiment_csv(const pooled_experiment* e) { return e ? e->csv.c_str() : ""; }

POOLED_API size_t pooled_experiment_window_count(const pooled_experiment* e) {
  return e ? e->result.windows.size() : 0;
}

POOLED_API pooled_status pooled_experiment_get_window(const pooled_experiment* e, size_t index, char* label,
                                                      size_t label_capacity, int* defined, double* m10,
                                                      double* m90) {
  POOLED_REQUIRE_ARG(e);
  POOLED_REQUIRE_ARG(defined);
  if (index >= e->result.windows.size()) {
    last_error() = "window index out of range";
    return POOLED_ERR_INVALID_INPUT;
  }
  const auto& w = e->result.windows[index];
  if (label) copy_string(label, label_capacity, w.curve);
  *defined = w.window.has_value();
  if (m10) *m10 = w.window ? w.window->m10 : 0.0;
  if (m90) *m90 = w.window ? w.window->m90 : 0.0;
  return POOLED_OK;
}

POOLED_API size_t pooled_experiment_file_count(const pooled_experiment* e) { return e ? e->result.files.size() : 0; }

POOLED_API const char* pooled_experiment_file(const pooled_experiment* e, size_t index) {
  if (!e || index >= e->result.files.size()) return nullptr;
  return e->result.files[index].c_str();
}

POOLED_API pooled_status pooled_transition_window(const double* m, const double* rate, size_t count, int interpolate,
                                                  double* m10, double* m90) {
  if (count) {
    POOLED_REQUIRE_ARG(m);
    POOLED_REQUIRE_ARG(rate);
  }
  POOLED_REQUIRE_ARG(m10);
  POOLED_REQUIRE_ARG(m90);
  return guarded([&] {
    std::vector<std::pair<double, double>> curve;
    for (size_t i = 0; i < count; ++i) curve.emplace_back(m[i], rate[i]);
    const auto window = pooled::transition_window(
        curve, interpolate ? pooled::WindowRule::Interpolated : pooled::WindowRule::GridPoint);
    *m10 = window.m10;
    *m90 = window.m90;
    return POOLED_OK;
  });
}

}  // extern "C"
