#ifndef DOCO_HARNESS_HPP
#define DOCO_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "doco/config.hpp"
#include "doco/delay_model.hpp"
#include "doco/environments.hpp"
#include "doco/learner.hpp"

namespace doco {

// ------------------------------------------------------------ comparator ---

struct ComparatorOptions {
  /// Ridge term for the unconstrained family; 0 picks the minimum-norm solution.
  double ridge = 0.0;
  int pgd_iterations = 10000;
  double pgd_tol = 1e-9;
  double optimality_tol = 1e-7;
};

/// Total realized loss sum_t f_t(x), compensated summation.
double total_loss(const RealizedStream& stream, const Vector& x);

/// Gradient of the total realized loss.
Vector total_grad(const RealizedStream& stream, const Vector& x);

/// u* = argmin over the domain of the total realized loss. Uses the normal
/// equations (a trust-region solve on a ball), then projected gradient
/// descent if the first-order residual is not small enough.
Vector offline_comparator(const RealizedStream& stream, const ComparatorOptions& opts = {});

/// Norm of the projected gradient mapping of the total loss at u.
double optimality_residual(const RealizedStream& stream, const Vector& u);

// -------------------------------------------------------------- registry ---

/// Everything an algorithm may know about its cell.
struct AlgoContext {
  LossFamily family;
  BallDomain domain;
  EnvConstants constants;
  Round horizon = 0;
  std::int64_t d_tot = 0;  // realized, used only by DOGD's oracle tuning
};

const std::vector<std::string>& registered_algorithms();
bool is_registered_algorithm(std::string_view name);

/// Throws ConfigError for unknown names, bad parameters, or a learner that
/// does not fit the domain (e.g. a ball-constrained learner on OLR).
std::unique_ptr<OnlineLearner> make_learner(const AlgoSpec& spec, const AlgoContext& ctx);

// ------------------------------------------------------------------ runs ---

/// Environment, schedule and comparator of one trial; shared read-only by
/// every algorithm run on that trial.
struct TrialContext {
  int trial = 0;
  std::uint64_t trial_seed = 0;
  std::shared_ptr<const Environment> env;
  std::shared_ptr<const RealizedStream> stream;
  DelaySchedule schedule;
  DelayStats delay_stats;
  EnvConstants constants;
  Vector comparator;
  std::vector<double> comparator_losses;  // f_t(u*), t = 1..T
  std::string env_label;
  std::string delay_label;
};

/// Seed shared by environment and schedule of trial i.
std::uint64_t trial_seed(std::uint64_t master_seed, int trial);
/// Seeds of the environment stream and of the delay schedule of trial i.
std::uint64_t environment_seed(std::uint64_t master_seed, int trial);
std::uint64_t schedule_seed(std::uint64_t master_seed, int trial);
/// Seed reserved for algorithm-side randomness; never feeds the environment.
std::uint64_t algorithm_seed(std::uint64_t master_seed, std::string_view algo, int trial);

TrialContext make_trial(const EnvironmentSpec& env, const DelayRegime& delay, Round horizon,
                        std::uint64_t master_seed, int trial, const ComparatorOptions& opts = {});

struct RunOptions {
  bool keep_points = false;      // store x_t for every round
  bool keep_deliveries = false;  // store the origins delivered each round
};

struct RegretTrace {
  std::string run_id;
  std::string algo;
  std::string env;
  std::string delay_regime;
  std::uint64_t seed = 0;
  int trial = 0;
  std::vector<double> inst_loss;   // f_t(x_t)
  std::vector<double> cum_regret;  // sum_{s <= t} f_s(x_s) - f_s(u*)
  std::vector<double> prediction;  // <z_t, x_t>
  std::vector<double> learning_rate;
  std::vector<double> clip_factor;
  std::vector<double> clip_level;
  std::vector<Vector> points;                  // RunOptions::keep_points
  std::vector<std::vector<Round>> deliveries;  // RunOptions::keep_deliveries
  double final_regret = 0.0;
  std::int64_t sigma_max = 0;
  std::int64_t d_max = 0;
  std::int64_t d_tot = 0;
  double wall_seconds = 0.0;
};

/// Plays the delayed protocol: at round t the learner sees z_t and outputs
/// x_t; after the loss is recorded, every packet with tau + d_tau = t is
/// delivered in ascending origin order.
RegretTrace run_cell(const TrialContext& trial, OnlineLearner& learner, std::string algo_label,
                     const RunOptions& opts = {});
RegretTrace run_cell(const TrialContext& trial, const AlgoSpec& algo, const RunOptions& opts = {});

struct AggregateRow {
  std::string algo;
  Round t = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single trial
  int n_trials = 0;
};

struct ExperimentResult {
  std::vector<TrialContext> trials;
  std::vector<RegretTrace> traces;  // algorithm-major, then trial
  std::vector<AggregateRow> aggregate;
};

/// Runs every (algorithm, trial) cell on `workers` threads. Output does not
/// depend on the worker count.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& opts = {});

std::vector<AggregateRow> aggregate(const std::vector<RegretTrace>& traces);

/// Algorithm-major trace list filtered to one algorithm.
std::vector<const RegretTrace*> traces_for(const ExperimentResult& result, std::string_view algo);

// ------------------------------------------------------------------- CSV ---

inline constexpr std::string_view kTraceHeader =
    "run_id,algo,env,delay_regime,seed,t,inst_loss,cum_regret";
inline constexpr std::string_view kAggregateHeader =
    "algo,t,mean_cum_regret,std_cum_regret,n_trials";

std::string format_real(double v);  // 12 significant digits
std::string csv_field(std::string_view s);

/// Throws ConfigError on an empty trace list; IoError names the path.
void emit_csv(const std::vector<RegretTrace>& traces, const std::filesystem::path& path);
void write_trace_csv(std::ostream& out, const std::vector<RegretTrace>& traces);
void emit_aggregate_csv(const std::vector<AggregateRow>& rows, const std::filesystem::path& path);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);

struct TraceRow {
  std::string run_id;
  std::string algo;
  std::string env;
  std::string delay_regime;
  std::uint64_t seed = 0;
  Round t = 0;
  double inst_loss = 0.0;
  double cum_regret = 0.0;
};

/// Reads a trace CSV back; ParseError carries the line number.
std::vector<TraceRow> read_trace_csv(std::istream& in);

/// Writes traces.csv, aggregate.csv, metadata.txt and schedules/ under
/// config.out_dir. Returns the directory.
std::filesystem::path write_experiment(const ExperimentConfig& config,
                                       const ExperimentResult& result);

}  // namespace doco

#endif  // DOCO_HARNESS_HPP
