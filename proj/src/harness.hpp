#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "amp.hpp"
#include "model.hpp"
#include "noise.hpp"
#include "theory.hpp"

namespace pooled {

enum class ExperimentKind { RequiredQueries, SuccessRate, Overlap, AmpCompare, ThresholdTable };
enum class Algorithm { Greedy, Amp, Both };

std::string_view kind_name(ExperimentKind kind);
std::string_view algorithm_name(Algorithm algorithm);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::SuccessRate;
  std::vector<std::uint64_t> ns;
  std::vector<Regime> regimes;
  std::vector<NoiseModel> models;
  std::vector<std::uint64_t> m_values;  // fixed-m kinds only
  std::uint64_t trials = 100;
  std::uint64_t master_seed = 1;
  Algorithm algorithm = Algorithm::Greedy;
  double eps = 0.05;          // slack of the reported / capping bound
  double cap_factor = 50.0;   // required-queries cap, multiple of the bound
  std::uint64_t stride = 1;   // required-queries step before backtracking
  unsigned workers = 1;
  bool oracle = false;        // verify the second-neighbourhood decomposition per trial
  bool timing = false;        // record wall-clock elapsed_ms (breaks byte-identical output)
  AmpConfig amp;
  std::string output_path;    // CSV path; plot-data files are written next to it

  void validate() const;
};

enum class RowFlag { None, Capped, Failed };

struct ResultRow {
  std::uint64_t seed = 0;
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  std::string regime;
  std::string model;
  double p = 0.0;
  double q = 0.0;
  double lambda = 0.0;
  std::string algorithm;
  std::uint64_t m = 0;
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  double mean_overlap = 0.0;
  double separation_margin_mean = 0.0;
  double elapsed_ms = 0.0;
  RowFlag flag = RowFlag::None;
};

// NaN fields compare equal to NaN.
bool same_row(const ResultRow& a, const ResultRow& b);

inline constexpr std::string_view kCsvHeader =
    "seed,n,k,regime,model,p,q,lambda,algorithm,m,trials,successes,mean_overlap,separation_margin_mean,elapsed_ms";

// A flagged row carries its flag as a suffix of the algorithm column,
// e.g. "greedy[capped]".
std::string format_csv_row(const ResultRow& row);
ResultRow parse_csv_row(std::string_view line);

struct RequiredOutcome {
  std::uint64_t m_star = 0;
  bool capped = false;
  double separation_margin = 0.0;
  double overlap = 1.0;
};

// Adds queries one at a time until the estimate equals the truth with a
// positive separation margin, then re-derives the scores from scratch at the
// returned m and checks that they agree exactly.
RequiredOutcome required_queries(std::uint64_t n, const Regime& regime, const NoiseModel& model,
                                 Algorithm algorithm, RngHandle rng, const ExperimentSpec& settings);

struct SuccessOutcome {
  std::uint64_t successes = 0;
  double mean_overlap = 0.0;
  double mean_margin = 0.0;
};

SuccessOutcome success_rate(const ProblemConfig& config, const NoiseModel& model, std::uint64_t trials,
                            Algorithm algorithm, RngHandle rng, const ExperimentSpec& settings = {});

enum class WindowRule {
  GridPoint,     // first grid m whose rate reaches the level
  Interpolated,  // linear interpolation between the bracketing grid points
};

struct TransitionWindow {
  double m10 = 0.0;
  double m90 = 0.0;
  double width() const { return m90 - m10; }
};

// `curve` holds (m, rate) pairs sorted by m.
TransitionWindow transition_window(const std::vector<std::pair<double, double>>& curve,
                                   WindowRule rule = WindowRule::GridPoint);

struct CurveWindow {
  std::string curve;
  std::optional<TransitionWindow> window;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<CurveWindow> windows;  // success curves of fixed-m kinds
  std::vector<std::string> files;
  bool all_capped = false;           // every required-queries point hit the cap
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);

// Figure presets; grids with n above max_n are dropped.
ExperimentSpec figure_preset(int figure, std::uint64_t max_n = 10000);

// Threshold query matching a simulation noise model.
ThresholdQuery threshold_query_for(std::uint64_t n, const Regime& regime, const NoiseModel& model, double eps);

}  // namespace pooled
