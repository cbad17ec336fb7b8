#include "harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "error.hpp"
#include "greedy.hpp"

namespace pooled {

std::string_view kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::RequiredQueries: return "required";
    case ExperimentKind::SuccessRate: return "success";
    case ExperimentKind::Overlap: return "overlap";
    case ExperimentKind::AmpCompare: return "amp-compare";
    case ExperimentKind::ThresholdTable: return "threshold";
  }
  return "unknown";
}

std::string_view algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Greedy: return "greedy";
    case Algorithm::Amp: return "amp";
    case Algorithm::Both: return "both";
  }
  return "unknown";
}

void ExperimentSpec::validate() const {
  require(trials >= 1, ErrorCode::InvalidConfig, "trials must be at least 1");
  require(stride >= 1, ErrorCode::InvalidConfig, "stride must be at least 1");
  require(cap_factor > 0.0, ErrorCode::InvalidConfig, "cap factor must be positive");
  require(eps >= 0.0, ErrorCode::InvalidConfig, "eps must be non-negative");
  for (const auto& model : models) pooled::validate(model);
  for (auto n : ns) {
    for (const auto& regime : regimes) {
      ProblemConfig config = ProblemConfig::from_regime(n, regime, 0);
      config.validate();
      if (kind == ExperimentKind::ThresholdTable || kind == ExperimentKind::RequiredQueries) {
        for (const auto& model : models) pooled::validate(threshold_query_for(n, regime, model, eps));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string format_double(double value) {
  std::array<char, 64> buffer{};
  auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), end);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  require(ec == std::errc() && end == text.data() + text.size(), ErrorCode::InvalidInput,
          "malformed number '" + std::string(text) + "'");
  return value;
}

std::uint64_t parse_uint(std::string_view text) {
  std::uint64_t value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  require(ec == std::errc() && end == text.data() + text.size(), ErrorCode::InvalidInput,
          "malformed integer '" + std::string(text) + "'");
  return value;
}

bool same_double(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return a == b;
}

constexpr std::string_view kCappedSuffix = "[capped]";
constexpr std::string_view kFailedSuffix = "[failed]";

}  // namespace

bool same_row(const ResultRow& a, const ResultRow& b) {
  return a.seed == b.seed && a.n == b.n && a.k == b.k && a.regime == b.regime && a.model == b.model &&
         same_double(a.p, b.p) && same_double(a.q, b.q) && same_double(a.lambda, b.lambda) &&
         a.algorithm == b.algorithm && a.m == b.m && a.trials == b.trials && a.successes == b.successes &&
         same_double(a.mean_overlap, b.mean_overlap) &&
         same_double(a.separation_margin_mean, b.separation_margin_mean) &&
         same_double(a.elapsed_ms, b.elapsed_ms) && a.flag == b.flag;
}

std::string format_csv_row(const ResultRow& row) {
  std::string algorithm = row.algorithm;
  if (row.flag == RowFlag::Capped) algorithm += kCappedSuffix;
  if (row.flag == RowFlag::Failed) algorithm += kFailedSuffix;
  std::ostringstream out;
  out << row.seed << ',' << row.n << ',' << row.k << ',' << row.regime << ',' << row.model << ','
      << format_double(row.p) << ',' << format_double(row.q) << ',' << format_double(row.lambda) << ','
      << algorithm << ',' << row.m << ',' << row.trials << ',' << row.successes << ','
      << format_double(row.mean_overlap) << ',' << format_double(row.separation_margin_mean) << ','
      << format_double(row.elapsed_ms);
  return out.str();
}

ResultRow parse_csv_row(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  require(fields.size() == 15, ErrorCode::InvalidInput,
          "CSV row has " + std::to_string(fields.size()) + " fields, expected 15");
  ResultRow row;
  row.seed = parse_uint(fields[0]);
  row.n = parse_uint(fields[1]);
  row.k = parse_uint(fields[2]);
  row.regime = std::string(fields[3]);
  row.model = std::string(fields[4]);
  row.p = parse_double(fields[5]);
  row.q = parse_double(fields[6]);
  row.lambda = parse_double(fields[7]);
  std::string_view algorithm = fields[8];
  if (algorithm.ends_with(kCappedSuffix)) {
    row.flag = RowFlag::Capped;
    algorithm.remove_suffix(kCappedSuffix.size());
  } else if (algorithm.ends_with(kFailedSuffix)) {
    row.flag = RowFlag::Failed;
    algorithm.remove_suffix(kFailedSuffix.size());
  }
  row.algorithm = std::string(algorithm);
  row.m = parse_uint(fields[9]);
  row.trials = parse_uint(fields[10]);
  row.successes = parse_uint(fields[11]);
  row.mean_overlap = parse_double(fields[12]);
  row.separation_margin_mean = parse_double(fields[13]);
  row.elapsed_ms = parse_double(fields[14]);
  return row;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& row : rows) out << format_csv_row(row) << '\n';
}

// ---------------------------------------------------------------------------
// Theory bridge

ThresholdQuery threshold_query_for(std::uint64_t n, const Regime& regime, const NoiseModel& model, double eps) {
  ThresholdQuery query;
  query.n = n;
  query.regime = regime;
  query.eps = eps;
  if (const auto* channel = std::get_if<NoisyChannel>(&model)) {
    query.p = channel->p;
    query.q = channel->q;
    if (channel->q > 0.0) {
      query.channel = ChannelKind::General;
    } else {
      query.channel = channel->p > 0.0 ? ChannelKind::Z : ChannelKind::Noiseless;
    }
  } else if (const auto* gauss = std::get_if<NoisyQuery>(&model)) {
    query.channel = ChannelKind::NoisyQuery;
    query.lambda = gauss->lambda;
  }
  return query;
}

// ---------------------------------------------------------------------------
// Trials

namespace {

// Lazily generated non-adaptive query sequence: every query is sampled and
// measured once, then frozen.
class QueryStream {
 public:
  QueryStream(const ProblemConfig& config, const GroundTruth& truth, const NoiseModel& model, Rng& rng)
      : config_(config), truth_(truth), model_(model), rng_(rng) {}

  void ensure(std::uint64_t m) {
    while (results_.size() < m) {
      sample_query_draws(config_.n, config_.gamma, rng_, draws_);
      const auto last = std::span<const AgentIndex>(draws_).last(config_.gamma);
      results_.push_back(measure_query(last, truth_, model_, rng_));
    }
  }

  std::span<const AgentIndex> draws(std::uint64_t j) const {
    return std::span<const AgentIndex>(draws_).subspan(j * config_.gamma, config_.gamma);
  }
  double result(std::uint64_t j) const { return results_[j]; }

  PoolingGraph graph(std::uint64_t m) const {
    return PoolingGraph(config_.n, config_.gamma,
                        std::vector<AgentIndex>(draws_.begin(), draws_.begin() + static_cast<std::ptrdiff_t>(m * config_.gamma)));
  }
  QueryResults results(std::uint64_t m) const {
    return {std::vector<double>(results_.begin(), results_.begin() + static_cast<std::ptrdiff_t>(m))};
  }

 private:
  const ProblemConfig& config_;
  const GroundTruth& truth_;
  const NoiseModel& model_;
  Rng& rng_;
  std::vector<AgentIndex> draws_;
  std::vector<double> results_;
};

bool matches_truth(std::span<const std::uint8_t> bits, const GroundTruth& truth) {
  return std::equal(bits.begin(), bits.end(), truth.bits().begin(), truth.bits().end());
}

RequiredOutcome greedy_required(const ProblemConfig& config, const GroundTruth& truth, QueryStream& stream,
                                std::uint64_t cap, std::uint64_t stride) {
  IncrementalScores scores(config.n, config.k);
  IncrementalScores checkpoint = scores;
  std::uint64_t checkpoint_m = 0;
  std::uint64_t m = 0;
  bool found = false;
  while (m < cap && !found) {
    stream.ensure(m + 1);
    scores.add_query(stream.draws(m), stream.result(m));
    ++m;
    if (m % stride != 0 && m != cap) continue;
    if (scores.separates(truth)) {
      found = true;
      if (stride > 1) {
        scores = checkpoint;
        m = checkpoint_m;
        do {
          scores.add_query(stream.draws(m), stream.result(m));
          ++m;
        } while (!scores.separates(truth));
      }
    } else if (stride > 1) {
      checkpoint = scores;
      checkpoint_m = m;
    }
  }

  RequiredOutcome outcome;
  outcome.m_star = m;
  outcome.capped = !found;

  // From-scratch recomputation at the returned m.
  const PoolingGraph graph = stream.graph(m);
  ScoreTable batch = compute_scores(neighborhood_sums(graph, stream.results(m)), graph, config.k);
  const ScoreTable incremental = scores.table();
  require(batch.psi == incremental.psi && batch.distinct_degree == incremental.distinct_degree &&
              batch.score == incremental.score,
          ErrorCode::InvalidInput, "incremental scores disagree with the batch recomputation");
  const Estimate estimate = rank_and_declare(batch, config.k);
  outcome.separation_margin = estimate.separation_margin;
  outcome.overlap = evaluate(estimate, truth).overlap;
  if (found) {
    require(matches_truth(estimate.bits, truth) && estimate.separation_margin > 0.0, ErrorCode::InvalidInput,
            "batch recomputation does not confirm the reconstruction");
  }
  return outcome;
}

RequiredOutcome amp_required(const ProblemConfig& config, const GroundTruth& truth, QueryStream& stream,
                             std::uint64_t cap, std::uint64_t stride, const AmpConfig& amp) {
  auto attempt = [&](std::uint64_t m, AmpOutcome& out) {
    stream.ensure(m);
    out = amp_reconstruct(stream.graph(m), stream.results(m), config.k, amp);
    return matches_truth(out.bits, truth) && out.separation_margin > 0.0;
  };
  RequiredOutcome outcome;
  AmpOutcome last;
  std::uint64_t previous = 0;
  for (std::uint64_t m = std::min(stride, cap);; m = std::min(m + stride, cap)) {
    if (attempt(m, last)) {
      for (std::uint64_t back = previous + 1; back < m; ++back) {
        if (attempt(back, last)) {
          m = back;
          break;
        }
      }
      outcome.m_star = m;
      outcome.separation_margin = last.separation_margin;
      return outcome;
    }
    previous = m;
    if (m == cap) break;
  }
  outcome.m_star = cap;
  outcome.capped = true;
  outcome.separation_margin = last.separation_margin;
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < last.bits.size(); ++i) hits += last.bits[i] && truth.is_one(static_cast<AgentIndex>(i));
  outcome.overlap = static_cast<double>(hits) / static_cast<double>(config.k);
  return outcome;
}

std::uint64_t query_cap(const ProblemConfig& config, const NoiseModel& model, const ExperimentSpec& settings) {
  const double bound = required_queries_value(threshold_query_for(config.n, config.regime, model, settings.eps));
  const double cap = std::ceil(settings.cap_factor * bound);
  return static_cast<std::uint64_t>(std::clamp(cap, 1.0, static_cast<double>(std::numeric_limits<std::uint32_t>::max() - 1)));
}

}  // namespace

RequiredOutcome required_queries(std::uint64_t n, const Regime& regime, const NoiseModel& model, Algorithm algorithm,
                                 RngHandle handle, const ExperimentSpec& settings) {
  require(algorithm != Algorithm::Both, ErrorCode::InvalidConfig, "required_queries runs one algorithm at a time");
  pooled::validate(model);
  const ProblemConfig config = ProblemConfig::from_regime(n, regime, 0);
  config.validate();
  Rng rng(handle);
  const GroundTruth truth = sample_ground_truth(config, rng);
  if (config.k == 0 || config.k == config.n) {
    return {0, false, std::numeric_limits<double>::infinity(), 1.0};
  }
  const std::uint64_t cap = query_cap(config, model, settings);
  QueryStream stream(config, truth, model, rng);
  if (algorithm == Algorithm::Amp) return amp_required(config, truth, stream, cap, settings.stride, settings.amp);
  return greedy_required(config, truth, stream, cap, settings.stride);
}

namespace {

struct TrialResult {
  bool exact = false;
  double overlap = 0.0;
  double margin = 0.0;
  bool failed = false;
  double elapsed_ms = 0.0;
};

void check_decomposition(const PoolingGraph& graph, const QueryResults& results, const ChannelTrace& trace) {
  const auto psi = neighborhood_sums(graph, results);
  for (AgentIndex i = 0; i < graph.agents(); ++i) {
    const auto total = second_neighborhood_count(graph, i, trace) + own_observed_contribution(graph, i, trace);
    require(static_cast<double>(total) == psi[i], ErrorCode::InvalidInput,
            "neighbourhood-sum decomposition violated at agent " + std::to_string(i));
  }
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

// One fixed-m instance evaluated by the selected algorithms (index 0 greedy, 1 amp).
std::array<TrialResult, 2> fixed_m_trial(const ProblemConfig& config, const NoiseModel& model, RngHandle handle,
                                         bool run_greedy, bool run_amp, const ExperimentSpec& settings) {
  Rng rng(handle);
  const GroundTruth truth = sample_ground_truth(config, rng);
  const PoolingGraph graph = sample_pooling_graph(config, rng);
  const bool trace_wanted = settings.oracle && !std::holds_alternative<NoisyQuery>(model);
  ChannelTrace trace;
  const QueryResults results = measure(graph, truth, model, rng, trace_wanted ? &trace : nullptr);
  if (trace_wanted) check_decomposition(graph, results, trace);

  std::array<TrialResult, 2> out;
  if (run_greedy) {
    const auto start = std::chrono::steady_clock::now();
    const Estimate estimate = greedy_reconstruct(graph, results, config.k);
    const Evaluation eval = evaluate(estimate, truth);
    out[0] = {eval.exact, eval.overlap, estimate.separation_margin, false, elapsed_since(start)};
  }
  if (run_amp) {
    const auto start = std::chrono::steady_clock::now();
    try {
      const AmpOutcome amp = amp_reconstruct(graph, results, config.k, settings.amp);
      Estimate estimate;
      estimate.bits = amp.bits;
      const Evaluation eval = evaluate(estimate, truth);
      out[1] = {eval.exact, eval.overlap, amp.separation_margin, false, elapsed_since(start)};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Divergence && e.code() != ErrorCode::Resource) throw;
      out[1].failed = true;
      out[1].elapsed_ms = elapsed_since(start);
    }
  }
  return out;
}

}  // namespace

SuccessOutcome success_rate(const ProblemConfig& config, const NoiseModel& model, std::uint64_t trials,
                            Algorithm algorithm, RngHandle handle, const ExperimentSpec& settings) {
  require(trials >= 1, ErrorCode::InvalidConfig, "trials must be at least 1");
  require(algorithm != Algorithm::Both, ErrorCode::InvalidConfig, "success_rate runs one algorithm at a time");
  config.validate();
  pooled::validate(model);
  const std::size_t slot = algorithm == Algorithm::Greedy ? 0 : 1;
  SuccessOutcome outcome;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto result = fixed_m_trial(config, model, handle.derive(t), slot == 0, slot == 1, settings)[slot];
    outcome.successes += result.exact;
    outcome.mean_overlap += result.overlap;
    outcome.mean_margin += result.margin;
  }
  outcome.mean_overlap /= static_cast<double>(trials);
  outcome.mean_margin /= static_cast<double>(trials);
  return outcome;
}

// ---------------------------------------------------------------------------
// Transition window

TransitionWindow transition_window(const std::vector<std::pair<double, double>>& curve, WindowRule rule) {
  auto crossing = [&](double level) -> std::optional<double> {
    for (std::size_t i = 0; i < curve.size(); ++i) {
      if (curve[i].second < level) continue;
      if (rule == WindowRule::GridPoint || i == 0) return curve[i].first;
      const auto [m0, r0] = curve[i - 1];
      const auto [m1, r1] = curve[i];
      return m0 + (level - r0) / (r1 - r0) * (m1 - m0);
    }
    return std::nullopt;
  };
  const auto m90 = crossing(0.9);
  require(m90.has_value(), ErrorCode::WindowUndefined, "success curve never reaches 0.9");
  return {*crossing(0.1), *m90};
}

// ---------------------------------------------------------------------------
// Experiment driver

namespace {

struct GridPoint {
  std::uint64_t n = 0;
  Regime regime;
  NoiseModel model;
  std::uint64_t m = 0;
};

void fill_model_columns(ResultRow& row, const NoiseModel& model) {
  row.model = model_name(model);
  if (const auto* channel = std::get_if<NoisyChannel>(&model)) {
    row.p = channel->p;
    row.q = channel->q;
  } else if (const auto* gauss = std::get_if<NoisyQuery>(&model)) {
    row.lambda = gauss->lambda;
  }
}

std::string curve_label(const ResultRow& row, bool with_n) {
  std::ostringstream out;
  if (with_n) out << "n" << row.n << "_";
  out << row.regime << "_" << row.model;
  if (row.model == "z" || row.model == "gnc") out << "_p" << row.p;
  if (row.model == "gnc") out << "_q" << row.q;
  if (row.model == "gauss") out << "_lambda" << row.lambda;
  out << "_" << row.algorithm;
  std::string label = out.str();
  std::erase_if(label, [](char c) { return c == '(' || c == ')'; });
  return label;
}

template <class Task>
void run_parallel(std::size_t count, unsigned workers, Task&& task) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            task(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

std::filesystem::path plot_path(const std::string& csv_path, const std::string& label) {
  std::filesystem::path path(csv_path);
  const auto stem = path.stem().string();
  return path.parent_path() / (stem + "." + label + ".dat");
}

void write_file(const std::filesystem::path& path, const std::string& content, std::vector<std::string>& files) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
  files.push_back(path.string());
}

std::string plot_data(const std::string& x_name, const std::string& y_name,
                      const std::vector<std::pair<double, double>>& points) {
  std::ostringstream out;
  out << "# " << x_name << ' ' << y_name << '\n';
  for (const auto& [x, y] : points) out << format_double(x) << ' ' << format_double(y) << '\n';
  return out.str();
}

std::vector<GridPoint> enumerate_grid(const ExperimentSpec& spec, bool with_m) {
  std::vector<GridPoint> grid;
  for (auto n : spec.ns) {
    for (const auto& regime : spec.regimes) {
      for (const auto& model : spec.models) {
        if (with_m) {
          for (auto m : spec.m_values) grid.push_back({n, regime, model, m});
        } else {
          grid.push_back({n, regime, model, 0});
        }
      }
    }
  }
  return grid;
}

ResultRow base_row(const ExperimentSpec& spec, const GridPoint& point) {
  ResultRow row;
  row.seed = spec.master_seed;
  row.n = point.n;
  row.k = point.regime.derive_k(point.n);
  row.regime = point.regime.describe();
  fill_model_columns(row, point.model);
  row.m = point.m;
  return row;
}

std::vector<Algorithm> selected_algorithms(Algorithm algorithm) {
  if (algorithm == Algorithm::Both) return {Algorithm::Greedy, Algorithm::Amp};
  return {algorithm};
}

void run_threshold_table(const ExperimentSpec& spec, ExperimentResult& result) {
  for (const auto& point : enumerate_grid(spec, false)) {
    ResultRow row = base_row(spec, point);
    row.algorithm = "bound";
    row.m = required_queries_bound(threshold_query_for(point.n, point.regime, point.model, spec.eps));
    result.rows.push_back(row);
  }
}

void run_required(const ExperimentSpec& spec, ExperimentResult& result) {
  const auto grid = enumerate_grid(spec, false);
  const auto algorithms = selected_algorithms(spec.algorithm);
  struct Slot {
    RequiredOutcome outcome;
    bool failed = false;
    double elapsed_ms = 0.0;
  };
  const std::size_t per_point = spec.trials * algorithms.size();
  std::vector<Slot> slots(grid.size() * per_point);
  const RngHandle root{spec.master_seed, 0};

  run_parallel(slots.size(), spec.workers, [&](std::size_t index) {
    const std::size_t g = index / per_point;
    const std::size_t t = (index % per_point) / algorithms.size();
    const Algorithm algorithm = algorithms[index % algorithms.size()];
    const auto start = std::chrono::steady_clock::now();
    try {
      slots[index].outcome = required_queries(grid[g].n, grid[g].regime, grid[g].model, algorithm,
                                              root.derive(g).derive(t), spec);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Divergence && e.code() != ErrorCode::Resource) throw;
      slots[index].failed = true;
    }
    slots[index].elapsed_ms = elapsed_since(start);
  });

  std::size_t capped_points = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    bool all_capped = true;
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
      for (std::uint64_t t = 0; t < spec.trials; ++t) {
        const Slot& slot = slots[g * per_point + t * algorithms.size() + a];
        ResultRow row = base_row(spec, grid[g]);
        row.algorithm = std::string(algorithm_name(algorithms[a]));
        row.trials = 1;
        row.m = slot.outcome.m_star;
        row.successes = (slot.failed || slot.outcome.capped) ? 0 : 1;
        row.mean_overlap = slot.failed ? 0.0 : slot.outcome.overlap;
        row.separation_margin_mean = slot.failed ? std::nan("") : slot.outcome.separation_margin;
        row.elapsed_ms = spec.timing ? slot.elapsed_ms : 0.0;
        row.flag = slot.failed ? RowFlag::Failed : (slot.outcome.capped ? RowFlag::Capped : RowFlag::None);
        all_capped = all_capped && slot.outcome.capped;
        result.rows.push_back(row);
      }
    }
    capped_points += all_capped;
  }
  result.all_capped = !grid.empty() && capped_points == grid.size();
}

void run_fixed_m(const ExperimentSpec& spec, ExperimentResult& result) {
  const auto grid = enumerate_grid(spec, true);
  const bool run_greedy = spec.algorithm != Algorithm::Amp;
  const bool run_amp = spec.algorithm != Algorithm::Greedy;
  std::vector<std::array<TrialResult, 2>> slots(grid.size() * spec.trials);
  std::vector<std::uint8_t> point_failed(grid.size(), 0);
  const RngHandle root{spec.master_seed, 0};

  run_parallel(slots.size(), spec.workers, [&](std::size_t index) {
    const std::size_t g = index / spec.trials;
    const std::size_t t = index % spec.trials;
    const GridPoint& point = grid[g];
    ProblemConfig config = ProblemConfig::from_regime(point.n, point.regime, point.m);
    slots[index] = fixed_m_trial(config, point.model, root.derive(g).derive(t), run_greedy, run_amp, spec);
  });

  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t a = 0; a < 2; ++a) {
      if ((a == 0 && !run_greedy) || (a == 1 && !run_amp)) continue;
      ResultRow row = base_row(spec, grid[g]);
      row.algorithm = a == 0 ? "greedy" : "amp";
      row.trials = spec.trials;
      bool failed = false;
      for (std::uint64_t t = 0; t < spec.trials; ++t) {
        const TrialResult& trial = slots[g * spec.trials + t][a];
        failed = failed || trial.failed;
        row.successes += trial.exact;
        row.mean_overlap += trial.overlap;
        row.separation_margin_mean += trial.margin;
        row.elapsed_ms += trial.elapsed_ms;
      }
      row.mean_overlap /= static_cast<double>(spec.trials);
      row.separation_margin_mean /= static_cast<double>(spec.trials);
      if (!spec.timing) row.elapsed_ms = 0.0;
      if (failed) row.flag = RowFlag::Failed;
      result.rows.push_back(row);
    }
  }
}

void collect_windows(const ExperimentSpec& spec, ExperimentResult& result) {
  std::map<std::string, std::vector<std::pair<double, double>>> curves;
  std::vector<std::string> order;
  for (const auto& row : result.rows) {
    const auto label = curve_label(row, true);
    if (!curves.contains(label)) order.push_back(label);
    curves[label].emplace_back(static_cast<double>(row.m),
                               static_cast<double>(row.successes) / static_cast<double>(row.trials));
  }
  (void)spec;
  for (const auto& label : order) {
    auto points = curves[label];
    std::stable_sort(points.begin(), points.end());
    CurveWindow window{label, std::nullopt};
    try {
      window.window = transition_window(points);
    } catch (const Error&) {
    }
    result.windows.push_back(window);
  }
}

void write_outputs(const ExperimentSpec& spec, ExperimentResult& result) {
  if (spec.output_path.empty()) return;
  std::ostringstream csv;
  write_csv(csv, result.rows);
  write_file(spec.output_path, csv.str(), result.files);

  // Curves in first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> curves;
  auto add = [&](const std::string& label, double x, double y) {
    if (!curves.contains(label)) order.push_back(label);
    curves[label].emplace_back(x, y);
  };

  std::string x_name = "m";
  std::string y_name;
  switch (spec.kind) {
    case ExperimentKind::ThresholdTable:
      x_name = "n";
      y_name = "bound_m";
      for (const auto& row : result.rows) add("threshold_" + curve_label(row, false), row.n, row.m);
      break;
    case ExperimentKind::RequiredQueries: {
      x_name = "n";
      y_name = "median_required_m";
      // Median over terminated trials, one point per (curve, n).
      std::vector<std::pair<std::string, std::uint64_t>> keys;
      std::map<std::pair<std::string, std::uint64_t>, std::vector<double>> samples;
      for (const auto& row : result.rows) {
        const auto key = std::make_pair("required_" + curve_label(row, false), row.n);
        if (!samples.contains(key)) keys.push_back(key);
        auto& values = samples[key];
        if (row.flag == RowFlag::None) values.push_back(static_cast<double>(row.m));
      }
      for (const auto& key : keys) {
        auto values = samples[key];
        if (values.empty()) continue;
        std::sort(values.begin(), values.end());
        const std::size_t mid = values.size() / 2;
        const double median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
        add(key.first, static_cast<double>(key.second), median);
      }
      // Theory line per noise model.
      for (const auto& point : enumerate_grid(spec, false)) {
        ResultRow row = base_row(spec, point);
        row.algorithm = "bound";
        add("theory_" + curve_label(row, false), static_cast<double>(point.n),
            static_cast<double>(required_queries_bound(threshold_query_for(point.n, point.regime, point.model, spec.eps))));
      }
      break;
    }
    case ExperimentKind::SuccessRate:
    case ExperimentKind::Overlap:
    case ExperimentKind::AmpCompare:
      for (const auto& row : result.rows) {
        const double rate = static_cast<double>(row.successes) / static_cast<double>(row.trials);
        if (spec.kind != ExperimentKind::Overlap) add("success_" + curve_label(row, true), row.m, rate);
        if (spec.kind != ExperimentKind::SuccessRate) add("overlap_" + curve_label(row, true), row.m, row.mean_overlap);
      }
      y_name = spec.kind == ExperimentKind::Overlap ? "mean_overlap" : "success_rate";
      break;
  }
  for (const auto& label : order) {
    const bool overlap = label.starts_with("overlap_");
    write_file(plot_path(spec.output_path, label),
               plot_data(x_name, overlap ? "mean_overlap" : (label.starts_with("success_") ? "success_rate" : y_name),
                         curves[label]),
               result.files);
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  switch (spec.kind) {
    case ExperimentKind::ThresholdTable:
      run_threshold_table(spec, result);
      break;
    case ExperimentKind::RequiredQueries:
      run_required(spec, result);
      break;
    case ExperimentKind::SuccessRate:
    case ExperimentKind::Overlap:
    case ExperimentKind::AmpCompare:
      run_fixed_m(spec, result);
      collect_windows(spec, result);
      break;
  }
  write_outputs(spec, result);
  return result;
}

// ---------------------------------------------------------------------------
// Presets

ExperimentSpec figure_preset(int figure, std::uint64_t max_n) {
  ExperimentSpec spec;
  spec.regimes = {Regime::sublinear(0.25)};
  spec.master_seed = 1;
  const std::vector<std::uint64_t> n_ladder = {100, 316, 1000, 3162, 10000, 31623, 100000};
  auto ladder = [&] {
    std::vector<std::uint64_t> out;
    for (auto n : n_ladder) {
      if (n <= max_n) out.push_back(n);
    }
    return out;
  };
  switch (figure) {
    case 2:
      spec.kind = ExperimentKind::RequiredQueries;
      spec.ns = ladder();
      spec.models = {NoisyChannel{0.1, 0.0}, NoisyChannel{0.2, 0.0}, NoisyChannel{0.3, 0.0}};
      spec.eps = 0.05;
      spec.trials = 25;
      break;
    case 3:
      spec.kind = ExperimentKind::RequiredQueries;
      spec.ns = ladder();
      spec.models = {NoisyQuery{0.0}, NoisyQuery{2.0}};
      spec.eps = 0.05;
      spec.trials = 25;
      break;
    case 4:
      spec.kind = ExperimentKind::RequiredQueries;
      spec.ns = ladder();
      for (double rate : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) spec.models.push_back(NoisyChannel{rate, rate});
      spec.eps = 0.05;
      spec.trials = 25;
      break;
    case 5:
    case 6:
      spec.kind = figure == 5 ? ExperimentKind::SuccessRate : ExperimentKind::Overlap;
      spec.ns = {1000};
      if (max_n < 1000) spec.ns.clear();
      spec.models = {NoisyChannel{0.1, 0.0}, NoisyChannel{0.3, 0.0}, NoisyChannel{0.5, 0.0}};
      for (std::uint64_t m = 0; m <= 600; m += 25) spec.m_values.push_back(m);
      spec.trials = 100;
      spec.eps = 0.1;
      spec.algorithm = Algorithm::Both;
      break;
    default:
      fail(ErrorCode::InvalidConfig, "no preset for figure " + std::to_string(figure) + " (expected 2-6)");
  }
  return spec;
}

}  // namespace pooled
