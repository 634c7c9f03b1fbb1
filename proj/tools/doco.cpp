// Command line front end: run experiments, inspect delay schedules, self-test.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>

#include "acceptance.hpp"
#include "doco/config.hpp"
#include "doco/delay_model.hpp"
#include "doco/harness.hpp"

namespace {

int report(const std::exception& e, int code) {
  std::cerr << "doco: " << e.what() << '\n';
  return code;
}

struct RunArgs {
  std::string config;
  std::string env;
  std::string delay;
  std::string algos;
  long long horizon = 0;
  int trials = 0;
  std::uint64_t master_seed = 0;
  bool seed_set = false;
  std::string out;
  int workers = -1;
};

int cmd_run(const RunArgs& a) {
  doco::ExperimentConfig cfg = a.config.empty() ? doco::ExperimentConfig{} : doco::load_config(a.config);
  if (!a.env.empty()) doco::apply_env_overrides(cfg, a.env);
  if (!a.delay.empty()) cfg.delay = doco::parse_delay_regime(a.delay);
  if (!a.algos.empty()) doco::set_algorithms(cfg, a.algos);
  if (a.horizon > 0) cfg.horizon = a.horizon;
  if (a.trials > 0) cfg.trials = a.trials;
  if (a.seed_set) cfg.master_seed = a.master_seed;
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.workers >= 0) cfg.workers = a.workers;

  const auto result = doco::run_experiment(cfg);
  const auto dir = doco::write_experiment(cfg, result);
  for (const auto& algo : cfg.algos) {
    const auto traces = doco::traces_for(result, algo.name);
    double mean = 0.0;
    for (const auto* tr : traces) mean += tr->final_regret;
    mean /= static_cast<double>(traces.size());
    std::printf("%-14s mean final regret %s over %zu trials\n", algo.name.c_str(),
                doco::format_real(mean).c_str(), traces.size());
  }
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

int cmd_schedule_stats(const std::string& delay, long long horizon, int trials,
                       std::uint64_t seed) {
  const doco::DelayRegime regime = doco::parse_delay_regime(delay);
  regime.validate();
  if (horizon < 1) throw doco::ConfigError("schedule-stats: field 'T' must be >= 1");
  if (trials < 1) throw doco::ConfigError("schedule-stats: field 'trials' must be >= 1");
  std::printf("regime %s, T = %lld\n", regime.describe().c_str(), horizon);
  std::printf("%6s %10s %10s %12s %14s\n", "trial", "sigma_max", "d_max", "d_tot", "2sqrt2*sqrt(dtot)");
  double sum_sigma = 0.0, sum_dmax = 0.0, sum_dtot = 0.0;
  for (int i = 0; i < trials; ++i) {
    // Same derivation as experiment trials, so the numbers match `run`.
    const auto s = doco::realize_schedule({regime, doco::schedule_seed(seed, i)}, horizon);
    const auto st = doco::stats(s);
    std::printf("%6d %10lld %10lld %12lld %14.3f\n", i, static_cast<long long>(st.sigma_max),
                static_cast<long long>(st.d_max), static_cast<long long>(st.d_tot),
                2.0 * std::sqrt(2.0) * std::sqrt(static_cast<double>(st.d_tot)));
    sum_sigma += static_cast<double>(st.sigma_max);
    sum_dmax += static_cast<double>(st.d_max);
    sum_dtot += static_cast<double>(st.d_tot);
  }
  std::printf("mean   %10.2f %10.2f %12.2f\n", sum_sigma / trials, sum_dmax / trials,
              sum_dtot / trials);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online convex optimization with delayed feedback: experiments and tools"};
  app.set_version_flag("--version", DOCO_VERSION_STRING);
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run an experiment grid and write CSV results");
  run->add_option("--config", run_args.config, "Experiment config file");
  run->add_option("--env", run_args.env, "Environment overrides, key=value[,key=value...]");
  run->add_option("--delay", run_args.delay, "Delay regime, e.g. uniform(0,5)");
  run->add_option("--algos", run_args.algos, "Comma-separated algorithm names");
  run->add_option("--T", run_args.horizon, "Horizon");
  run->add_option("--trials", run_args.trials, "Number of paired trials");
  auto* seed_opt = run->add_option("--master-seed", run_args.master_seed, "Master seed");
  run->add_option("--out", run_args.out, "Output directory");
  run->add_option("--workers", run_args.workers, "Worker threads (0 = all cores)");

  std::string ss_delay = "uniform(0,5)";
  long long ss_horizon = 10000;
  int ss_trials = 20;
  std::uint64_t ss_seed = 1;
  auto* sstats = app.add_subcommand("schedule-stats", "Summarize realized delay schedules");
  sstats->add_option("--delay", ss_delay, "Delay regime")->required();
  sstats->add_option("--T", ss_horizon, "Horizon")->required();
  sstats->add_option("--trials", ss_trials, "Number of schedules");
  sstats->add_option("--master-seed", ss_seed, "Master seed");

  bool quick = false;
  auto* selftest = app.add_subcommand("selftest", "Run the property and acceptance suites");
  selftest->add_flag("--quick", quick, "Smaller horizons and fewer trials");

  auto* list = app.add_subcommand("list-algos", "Print the registered algorithm names");

  CLI11_PARSE(app, argc, argv);
  run_args.seed_set = seed_opt->count() > 0;

  try {
    if (*run) return cmd_run(run_args);
    if (*sstats) return cmd_schedule_stats(ss_delay, ss_horizon, ss_trials, ss_seed);
    if (*selftest) {
      doco_acceptance::Options opts;
      opts.quick = quick;
      return doco_acceptance::run_all(std::cout, opts) ? 0 : 1;
    }
    if (*list) {
      for (const auto& name : doco::registered_algorithms()) std::cout << name << '\n';
      return 0;
    }
  } catch (const doco::ConfigError& e) {
    return report(e, 2);
  } catch (const doco::ParseError& e) {
    return report(e, 3);
  } catch (const doco::IoError& e) {
    return report(e, 4);
  } catch (const std::exception& e) {
    return report(e, 1);
  }
  return 0;
}
