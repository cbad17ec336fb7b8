/*
 * pooled: simulation and reconstruction for the noisy pooled data problem.
 *
 * Plain C interface over the C++ core. Objects are opaque handles created
 * and destroyed through this API; every fallible call returns a
 * pooled_status and leaves a thread-local message for pooled_last_error().
 */
#ifndef POOLED_POOLED_H
#define POOLED_POOLED_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define POOLED_API __declspec(dllexport)
#else
#define POOLED_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* The first four values double as CLI exit codes. */
typedef enum pooled_status {
  POOLED_OK = 0,
  POOLED_ERR_INVALID_CONFIG = 1,
  POOLED_ERR_IO = 2,
  POOLED_ERR_NOT_TERMINATED = 3,
  POOLED_ERR_INVALID_INPUT = 4,
  POOLED_ERR_EMPTY_GRAPH = 5,
  POOLED_ERR_RESOURCE = 6,
  POOLED_ERR_DIVERGENCE = 7,
  POOLED_ERR_WINDOW_UNDEFINED = 8,
  POOLED_ERR_NULL_ARGUMENT = 9,
  POOLED_ERR_INTERNAL = 10
} pooled_status;

POOLED_API const char* pooled_version(void);
POOLED_API const char* pooled_status_name(pooled_status status);
/* Message of the last failed call on this thread ("" if none). */
POOLED_API const char* pooled_last_error(void);

/* ---- noise models ------------------------------------------------------ */

typedef enum pooled_model_kind {
  POOLED_MODEL_NONE = 0,  /* exact sums */
  POOLED_MODEL_Z = 1,     /* channel with q = 0 */
  POOLED_MODEL_GNC = 2,   /* channel with false-negative p, false-positive q */
  POOLED_MODEL_GAUSS = 3  /* exact sum + N(0, lambda^2) per query */
} pooled_model_kind;

typedef struct pooled_noise {
  pooled_model_kind kind;
  double p;
  double q;
  double lambda;
} pooled_noise;

typedef enum pooled_regime_kind {
  POOLED_REGIME_SUBLINEAR = 0, /* k = round(n^theta) */
  POOLED_REGIME_LINEAR = 1     /* k = round(zeta n) */
} pooled_regime_kind;

/* ---- thresholds -------------------------------------------------------- */

typedef struct pooled_threshold_query {
  uint64_t n;
  pooled_regime_kind regime;
  double regime_param;
  pooled_noise noise;
  double eps;
} pooled_threshold_query;

POOLED_API double pooled_gamma_constant(void);

/* Ceiling of the sufficient query count; `value` (nullable) receives the
 * unrounded right-hand side. Natural logarithm throughout. */
POOLED_API pooled_status pooled_required_queries_bound(const pooled_threshold_query* query, uint64_t* m,
                                                       double* value);

typedef enum pooled_feasibility {
  POOLED_ACHIEVABLE = 0,
  POOLED_FAILING = 1,
  POOLED_INDETERMINATE = 2
} pooled_feasibility;

POOLED_API pooled_status pooled_noisy_query_feasibility(uint64_t m, uint64_t n, double lambda, double c_safe,
                                                        double c_fail, pooled_feasibility* out);

/* ---- single instances -------------------------------------------------- */

typedef struct pooled_instance pooled_instance;

/* Samples truth (weight k), m queries of size gamma (0 = floor(n/2)) and
 * their results under `noise`, all from stream (seed, stream). */
POOLED_API pooled_status pooled_instance_sample(uint64_t n, uint64_t k, uint64_t m, uint64_t gamma,
                                                const pooled_noise* noise, uint64_t seed, uint64_t stream,
                                                pooled_instance** out);

/* Explicit instance: `draws` holds m*gamma agent indices, `truth` n bits.
 * Results are measured under `noise` with the given stream. */
POOLED_API pooled_status pooled_instance_create(uint64_t n, uint64_t gamma, uint64_t m, const uint32_t* draws,
                                                const uint8_t* truth, const pooled_noise* noise, uint64_t seed,
                                                uint64_t stream, pooled_instance** out);

POOLED_API void pooled_instance_destroy(pooled_instance* instance);

typedef struct pooled_instance_info {
  uint64_t n;
  uint64_t k;
  uint64_t m;
  uint64_t gamma;
} pooled_instance_info;

POOLED_API pooled_status pooled_instance_get_info(const pooled_instance* instance, pooled_instance_info* info);
POOLED_API pooled_status pooled_instance_get_results(const pooled_instance* instance, double* results,
                                                     size_t length);
/* Multi-degrees and distinct degrees, each of length n (either nullable). */
POOLED_API pooled_status pooled_instance_get_degrees(const pooled_instance* instance, uint32_t* multi,
                                                     uint32_t* distinct, size_t length);
/* Writes the graph in the line format "n m gamma" + one line per query. */
POOLED_API pooled_status pooled_instance_write_graph(const pooled_instance* instance, const char* path);

typedef struct pooled_evaluation {
  int exact;
  double overlap;
  double separation_margin;
} pooled_evaluation;

typedef enum pooled_sort_method { POOLED_SORT_COMPARISON = 0, POOLED_SORT_BITONIC = 1 } pooled_sort_method;

/* Greedy reconstruction with k = weight of the instance truth. `bits`
 * (length n) and `scores` (length n) are nullable. */
POOLED_API pooled_status pooled_instance_greedy(const pooled_instance* instance, pooled_sort_method method,
                                                uint8_t* bits, double* scores, size_t length,
                                                pooled_evaluation* evaluation);

typedef struct pooled_amp_options {
  int centered;            /* nonzero: centred-scaled design matrix */
  int soft_threshold;      /* nonzero: soft threshold, else Bernoulli posterior mean */
  double threshold_alpha;  /* soft threshold = alpha * effective noise std */
  uint64_t max_iters;
  double tol;
} pooled_amp_options;

POOLED_API void pooled_amp_default_options(pooled_amp_options* options);
POOLED_API pooled_status pooled_instance_amp(const pooled_instance* instance, const pooled_amp_options* options,
                                             uint8_t* bits, size_t length, pooled_evaluation* evaluation,
                                             uint64_t* iterations);

/* ---- experiments ------------------------------------------------------- */

typedef enum pooled_experiment_kind {
  POOLED_EXP_REQUIRED = 0,
  POOLED_EXP_SUCCESS = 1,
  POOLED_EXP_OVERLAP = 2,
  POOLED_EXP_AMP_COMPARE = 3,
  POOLED_EXP_THRESHOLD_TABLE = 4
} pooled_experiment_kind;

typedef enum pooled_algorithm {
  POOLED_ALGO_GREEDY = 0,
  POOLED_ALGO_AMP = 1,
  POOLED_ALGO_BOTH = 2
} pooled_algorithm;

typedef struct pooled_experiment pooled_experiment;

POOLED_API pooled_status pooled_experiment_create(pooled_experiment_kind kind, pooled_experiment** out);
/* Figure presets 2-6; grids above max_n are dropped. */
POOLED_API pooled_status pooled_experiment_create_preset(int figure, uint64_t max_n, pooled_experiment** out);
POOLED_API void pooled_experiment_destroy(pooled_experiment* experiment);

POOLED_API pooled_status pooled_experiment_set_ns(pooled_experiment* e, const uint64_t* ns, size_t count);
POOLED_API pooled_status pooled_experiment_set_regimes(pooled_experiment* e, pooled_regime_kind kind,
                                                       const double* params, size_t count);
POOLED_API pooled_status pooled_experiment_set_noises(pooled_experiment* e, const pooled_noise* noises,
                                                      size_t count);
POOLED_API pooled_status pooled_experiment_set_m_values(pooled_experiment* e, const uint64_t* ms, size_t count);
POOLED_API pooled_status pooled_experiment_set_trials(pooled_experiment* e, uint64_t trials);
POOLED_API pooled_status pooled_experiment_set_seed(pooled_experiment* e, uint64_t seed);
POOLED_API pooled_status pooled_experiment_set_algorithm(pooled_experiment* e, pooled_algorithm algorithm);
POOLED_API pooled_status pooled_experiment_set_eps(pooled_experiment* e, double eps);
POOLED_API pooled_status pooled_experiment_set_workers(pooled_experiment* e, unsigned workers);
POOLED_API pooled_status pooled_experiment_set_oracle(pooled_experiment* e, int enabled);
POOLED_API pooled_status pooled_experiment_set_timing(pooled_experiment* e, int enabled);
POOLED_API pooled_status pooled_experiment_set_stride(pooled_experiment* e, uint64_t stride);
POOLED_API pooled_status pooled_experiment_set_cap_factor(pooled_experiment* e, double factor);
POOLED_API pooled_status pooled_experiment_set_output(pooled_experiment* e, const char* csv_path);

/* Runs the grid. Returns POOLED_ERR_NOT_TERMINATED when every
 * required-queries grid point hit the cap (rows are still available). */
POOLED_API pooled_status pooled_experiment_run(pooled_experiment* e);

typedef enum pooled_row_flag { POOLED_ROW_OK = 0, POOLED_ROW_CAPPED = 1, POOLED_ROW_FAILED = 2 } pooled_row_flag;

typedef struct pooled_result_row {
  uint64_t seed;
  uint64_t n;
  uint64_t k;
  char regime[48];
  char model[16];
  double p;
  double q;
  double lambda;
  char algorithm[16];
  uint64_t m;
  uint64_t trials;
  uint64_t successes;
  double mean_overlap;
  double separation_margin_mean;
  double elapsed_ms;
  pooled_row_flag flag;
} pooled_result_row;

POOLED_API size_t pooled_experiment_row_count(const pooled_experiment* e);
POOLED_API pooled_status pooled_experiment_get_row(const pooled_experiment* e, size_t index, pooled_result_row* row);
/* CSV text of the last run, header included; valid until the next run or destroy. */
POOLED_API const char* pooled_experiment_csv(const pooled_experiment* e);

/* Transition windows of the success curves of the last run. */
POOLED_API size_t pooled_experiment_window_count(const pooled_experiment* e);
/* `defined` is 0 when the curve never reached 0.9. `label` may be NULL. */
POOLED_API pooled_status pooled_experiment_get_window(const pooled_experiment* e, size_t index, char* label,
                                                      size_t label_capacity, int* defined, double* m10,
                                                      double* m90);

POOLED_API size_t pooled_experiment_file_count(const pooled_experiment* e);
POOLED_API const char* pooled_experiment_file(const pooled_experiment* e, size_t index);

/* (m, rate) pairs sorted by m; interpolate != 0 selects linear interpolation
 * between bracketing grid points instead of the first grid point. */
POOLED_API pooled_status pooled_transition_window(const double* m, const double* rate, size_t count,
                                                  int interpolate, double* m10, double* m90);

POOLED_API const char* pooled_csv_header(void);

#ifdef __cplusplus
}
#endif

#endif /* POOLED_POOLED_H */
