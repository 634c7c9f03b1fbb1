#include "doco/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "doco/baselines.hpp"
#include "doco/learners.hpp"
#include "doco/random.hpp"

namespace doco {

namespace {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

constexpr std::uint64_t kEnvStream = 0x656e76;    // "env"
constexpr std::uint64_t kDelayStream = 0x646c79;  // "dly"

struct NormalEquations {
  Matrix h;  // Hessian of the total loss
  Vector b;  // total loss = 1/2 x^T H x - b^T x + const
};

NormalEquations normal_equations(const RealizedStream& stream) {
  const Eigen::Index n = stream.domain().dim;
  NormalEquations ne{Matrix::Zero(n, n), Vector::Zero(n)};
  for (Round t = 1; t <= stream.horizon(); ++t) {
    const auto& r = stream.round(t);
    ne.h.selfadjointView<Eigen::Lower>().rankUpdate(r.features, 1.0);
    ne.b += r.label * r.features;
  }
  ne.h = ne.h.selfadjointView<Eigen::Lower>();
  if (stream.family() == LossFamily::strongly_convex_ridge) {
    ne.h.diagonal().array() += static_cast<double>(stream.horizon());
  }
  return ne;
}

// min 1/2 x^T H x - b^T x over ||x|| <= R with H PSD: x(mu) = (H + mu I)^{-1} b
// where ||x(mu)|| = R, found by bisection in the eigenbasis of H.
Vector trust_region_solve(const Matrix& h, const Vector& b, double radius) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  if (eig.info() != Eigen::Success) throw NumericError("comparator: eigendecomposition failed");
  const Vector lam = eig.eigenvalues().cwiseMax(0.0);
  const Vector c = eig.eigenvectors().transpose() * b;
  const auto norm_at = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double v = c(i) / (lam(i) + mu);
      s += v * v;
    }
    return std::sqrt(s);
  };
  double lo = 0.0;
  double hi = std::max(1.0, c.norm() / std::max(radius, 1e-300));
  while (norm_at(hi) > radius) hi *= 2.0;
  for (int i = 0; i < 300 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (norm_at(mid) > radius ? lo : hi) = mid;
  }
  Vector y(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) y(i) = c(i) / (lam(i) + hi);
  return eig.eigenvectors() * y;
}

double gradient_mapping(const Matrix& h, const Vector& b, const Vector& u, const BallDomain& dom,
                        double step) {
  const Vector g = h * u - b;
  return (u - project_ball(u - step * g, dom)).norm() / step;
}

template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  std::size_t threads = workers > 0 ? static_cast<std::size_t>(workers)
                                    : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

void require_bounded(const AlgoContext& ctx, std::string_view name) {
  if (!ctx.domain.bounded()) {
    throw ConfigError(std::string(name) + ": needs a bounded domain, the environment is unconstrained");
  }
}

void require_unbounded(const AlgoContext& ctx, std::string_view name) {
  if (ctx.domain.bounded()) {
    throw ConfigError(std::string(name) + ": is an unconstrained regression learner, the environment is ball-constrained");
  }
}

double strong_convexity(const AlgoSpec& spec, const AlgoContext& ctx) {
  const double lambda = spec.get_double("lambda", ctx.constants.lambda);
  if (!(lambda > 0.0)) {
    throw ConfigError(spec.name + ": needs a strongly convex loss (or an explicit 'lambda')");
  }
  return lambda;
}

std::unique_ptr<OnlineLearner> make_ons(const AlgoSpec& spec, const AlgoContext& ctx,
                                        OnsTuning tuning) {
  require_bounded(ctx, spec.name);
  OnsConfig cfg;
  cfg.tuning = tuning;
  cfg.g_bound = spec.get_double("G", ctx.constants.g_bound);
  cfg.diameter = spec.get_double("D", ctx.constants.diameter);
  cfg.alpha = spec.get_double("alpha", ctx.constants.alpha);
  if (const auto beta = spec.get("beta")) cfg.beta = spec.get_double("beta", 0.0);
  cfg.horizon = ctx.horizon;
  cfg.constant_eta = spec.get_double("eta", 1.0);
  cfg.projection.tol = spec.get_double("projection_tol", cfg.projection.tol);
  return std::make_unique<DelayedOns>(cfg, ctx.domain);
}

using Builder = std::unique_ptr<OnlineLearner> (*)(const AlgoSpec&, const AlgoContext&);

struct Registration {
  std::string_view name;
  Builder build;
};

const Registration kRegistry[] = {
    {"dftrl",
     [](const AlgoSpec& s, const AlgoContext& c) -> std::unique_ptr<OnlineLearner> {
       require_bounded(c, s.name);
       return std::make_unique<DelayedFtrl>(strong_convexity(s, c), c.domain);
     }},
    {"dons-adaptive",
     [](const AlgoSpec& s, const AlgoContext& c) { return make_ons(s, c, OnsTuning::adaptive); }},
    {"dons-constant",
     [](const AlgoSpec& s, const AlgoContext& c) { return make_ons(s, c, OnsTuning::constant); }},
    {"dons-sqrt",
     [](const AlgoSpec& s, const AlgoContext& c) {
       return make_ons(s, c, OnsTuning::sqrt_missing);
     }},
    {"dvaw",
     [](const AlgoSpec& s, const AlgoContext& c) -> std::unique_ptr<OnlineLearner> {
       require_unbounded(c, s.name);
       VawConfig cfg;
       cfg.tuning = parse_vaw_tuning(s.get("tuning").value_or("adaptive"));
       cfg.gamma = s.get_double("gamma", 1.0);
       if (const auto z = s.get("z_bound")) {
         cfg.z_bound = *z == "env" ? c.constants.z_bound : s.get_double("z_bound", 0.0);
       }
       cfg.horizon = c.horizon;
       cfg.clip = s.get_bool("clip", true);
       return std::make_unique<DelayedVaw>(cfg, c.domain.dim);
     }},
    {"domd",
     [](const AlgoSpec& s, const AlgoContext& c) -> std::unique_ptr<OnlineLearner> {
       require_bounded(c, s.name);
       return std::make_unique<DelayedOmd>(strong_convexity(s, c), c.domain);
     }},
    {"sdmd-rsc",
     [](const AlgoSpec& s, const AlgoContext& c) -> std::unique_ptr<OnlineLearner> {
       require_bounded(c, s.name);
       return std::make_unique<SdmdRsc>(strong_convexity(s, c), c.domain);
     }},
    {"dogd",
     [](const AlgoSpec& s, const AlgoContext& c) -> std::unique_ptr<OnlineLearner> {
       const double eta = s.get("eta") ? s.get_double("eta", 0.0)
                                       : dogd_step_size(c.constants.diameter, c.constants.g_bound,
                                                        c.horizon, c.d_tot);
       return std::make_unique<Dogd>(eta, c.domain);
     }},
    {"dogd-sc",
     [](const AlgoSpec& s, const AlgoContext& c) -> std::unique_ptr<OnlineLearner> {
       return std::make_unique<DogdSc>(strong_convexity(s, c), c.domain);
     }},
    {"bold-ogd",
     [](const AlgoSpec& s, const AlgoContext& c) -> std::unique_ptr<OnlineLearner> {
       const double lambda = strong_convexity(s, c);
       const BallDomain dom = c.domain;
       return std::make_unique<Bold>("bold-ogd", [lambda, dom] {
         return std::make_unique<ClassicOgdSc>(lambda, dom);
       });
     }},
    {"bold-ons",
     [](const AlgoSpec& s, const AlgoContext& c) -> std::unique_ptr<OnlineLearner> {
       require_bounded(c, s.name);
       const double beta = s.get_double("beta", c.constants.beta);
       const double eps = s.get_double("epsilon", 1.0);
       const BallDomain dom = c.domain;
       return std::make_unique<Bold>("bold-ons", [beta, eps, dom] {
         return std::make_unique<ClassicOns>(beta, eps, dom);
       });
     }},
    {"bold-vaw",
     [](const AlgoSpec& s, const AlgoContext& c) -> std::unique_ptr<OnlineLearner> {
       require_unbounded(c, s.name);
       const double eta = s.get_double("eta", 1.0);
       const bool clip = s.get_bool("clip", false);
       const Eigen::Index n = c.domain.dim;
       return std::make_unique<Bold>("bold-vaw", [eta, n, clip] {
         return std::make_unique<ClassicVaw>(eta, n, clip);
       });
     }},
};

}  // namespace

// ------------------------------------------------------------ comparator ---

double total_loss(const RealizedStream& stream, const Vector& x) {
  CompensatedSum s;
  for (Round t = 1; t <= stream.horizon(); ++t) s.add(stream.loss_value(t, x));
  return s.value();
}

Vector total_grad(const RealizedStream& stream, const Vector& x) {
  Vector g = Vector::Zero(x.size());
  for (Round t = 1; t <= stream.horizon(); ++t) g += stream.loss_grad(t, x);
  return g;
}

double optimality_residual(const RealizedStream& stream, const Vector& u) {
  const NormalEquations ne = normal_equations(stream);
  const double lmax =
      std::max(Eigen::SelfAdjointEigenSolver<Matrix>(ne.h).eigenvalues().maxCoeff(), 1e-12);
  return gradient_mapping(ne.h, ne.b, u, stream.domain(), 1.0 / lmax);
}

Vector offline_comparator(const RealizedStream& stream, const ComparatorOptions& opts) {
  const BallDomain& dom = stream.domain();
  NormalEquations ne = normal_equations(stream);
  if (!dom.bounded()) ne.h.diagonal().array() += opts.ridge;

  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(ne.h);
  Vector u = cod.solve(ne.b);  // minimum-norm minimizer when H is singular
  if (!u.allFinite()) {
    throw NumericError("comparator: normal equations are singular; set comparator_ridge > 0");
  }
  if (!dom.bounded()) return u;
  if (dom.radius <= 0.0) return Vector::Zero(dom.dim);
  if (u.norm() > dom.radius) u = project_ball(trust_region_solve(ne.h, ne.b, dom.radius), dom);

  const double lmax = std::max(Eigen::SelfAdjointEigenSolver<Matrix>(ne.h).eigenvalues().maxCoeff(), 1e-12);
  const double step = 1.0 / lmax;
  const double target = opts.optimality_tol * (1.0 + ne.b.norm());
  if (gradient_mapping(ne.h, ne.b, u, dom, step) <= target) return u;
  // Projected gradient polish.
  for (int i = 0; i < opts.pgd_iterations; ++i) {
    const Vector next = project_ball(u - step * (ne.h * u - ne.b), dom);
    const double moved = (next - u).norm() / step;
    u = next;
    if (moved <= opts.pgd_tol) break;
  }
  return u;
}

// -------------------------------------------------------------- registry ---

const std::vector<std::string>& registered_algorithms() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& r : kRegistry) out.emplace_back(r.name);
    return out;
  }();
  return names;
}

bool is_registered_algorithm(std::string_view name) {
  return std::any_of(std::begin(kRegistry), std::end(kRegistry),
                     [&](const Registration& r) { return r.name == name; });
}

std::unique_ptr<OnlineLearner> make_learner(const AlgoSpec& spec, const AlgoContext& ctx) {
  for (const auto& r : kRegistry) {
    if (r.name == spec.name) return r.build(spec, ctx);
  }
  throw ConfigError("unknown algorithm '" + spec.name + "'");
}

// ------------------------------------------------------------------ runs ---

std::uint64_t trial_seed(std::uint64_t master_seed, int trial) {
  return mix_seed(master_seed, static_cast<std::uint64_t>(trial));
}

std::uint64_t environment_seed(std::uint64_t master_seed, int trial) {
  return mix_seed(trial_seed(master_seed, trial), kEnvStream);
}

std::uint64_t schedule_seed(std::uint64_t master_seed, int trial) {
  return mix_seed(trial_seed(master_seed, trial), kDelayStream);
}

std::uint64_t algorithm_seed(std::uint64_t master_seed, std::string_view algo, int trial) {
  return mix_seed(trial_seed(master_seed, trial), hash_name(algo));
}

TrialContext make_trial(const EnvironmentSpec& env, const DelayRegime& delay, Round horizon,
                        std::uint64_t master_seed, int trial, const ComparatorOptions& opts) {
  TrialContext c;
  c.trial = trial;
  c.trial_seed = trial_seed(master_seed, trial);
  c.env = std::make_shared<const Environment>(env, environment_seed(master_seed, trial));
  c.stream = std::make_shared<const RealizedStream>(*c.env, horizon);
  c.schedule = realize_schedule(DelayRegimeSpec{delay, schedule_seed(master_seed, trial)}, horizon);
  c.delay_stats = stats(c.schedule);
  c.constants = env_constants(*c.env, *c.stream);
  c.comparator = offline_comparator(*c.stream, opts);
  c.comparator_losses.reserve(static_cast<std::size_t>(horizon));
  for (Round t = 1; t <= horizon; ++t) {
    c.comparator_losses.push_back(c.stream->loss_value(t, c.comparator));
  }
  c.env_label = c.env->label();
  c.delay_label = delay.describe();
  return c;
}

RegretTrace run_cell(const TrialContext& trial, OnlineLearner& learner, std::string algo_label,
                     const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  const RealizedStream& stream = *trial.stream;
  const Round T = stream.horizon();
  const Eigen::Index n = stream.domain().dim;
  const ArrivalIndex arrivals(trial.schedule);

  RegretTrace tr;
  tr.algo = std::move(algo_label);
  tr.run_id = tr.algo + "/trial-" + std::to_string(trial.trial);
  tr.env = trial.env_label;
  tr.delay_regime = trial.delay_label;
  tr.seed = trial.trial_seed;
  tr.trial = trial.trial;
  tr.sigma_max = trial.delay_stats.sigma_max;
  tr.d_max = trial.delay_stats.d_max;
  tr.d_tot = trial.delay_stats.d_tot;
  const auto size = static_cast<std::size_t>(T);
  tr.inst_loss.reserve(size);
  tr.cum_regret.reserve(size);
  tr.prediction.reserve(size);
  tr.learning_rate.reserve(size);
  tr.clip_factor.reserve(size);
  tr.clip_level.reserve(size);

  std::vector<Vector> played(size + 1);
  std::vector<Vector> grads(size + 1);
  CompensatedSum regret;
  for (Round t = 1; t <= T; ++t) {
    const RoundData& r = stream.round(t);
    Vector x = learner.play(r.features);
    if (x.size() != n || !x.allFinite()) {
      throw NumericError(tr.algo + ": invalid point at round " + std::to_string(t));
    }
    const RoundDiagnostics at_play = learner.diagnostics();
    const double loss = stream.loss_value(t, x);
    regret.add(loss - trial.comparator_losses[static_cast<std::size_t>(t - 1)]);
    tr.inst_loss.push_back(loss);
    tr.cum_regret.push_back(regret.value());
    tr.prediction.push_back(r.features.dot(x));
    tr.clip_factor.push_back(at_play.clip_factor);
    tr.clip_level.push_back(at_play.clip_level);
    grads[static_cast<std::size_t>(t)] = stream.loss_grad(t, x);
    if (opts.keep_points) tr.points.push_back(x);
    played[static_cast<std::size_t>(t)] = std::move(x);

    FeedbackBatch batch;
    batch.round = t;
    for (const Round origin : arrivals.at(t)) {
      const auto o = static_cast<std::size_t>(origin);
      const RoundData& ro = stream.round(origin);
      batch.gradients.push_back(GradientPacket{origin, grads[o], played[o], t});
      batch.labels.push_back(LabelPacket{origin, ro.label, ro.features, t});
    }
    if (opts.keep_deliveries) {
      tr.deliveries.emplace_back(arrivals.at(t).begin(), arrivals.at(t).end());
    }
    learner.absorb(batch);
    for (const Round origin : arrivals.at(t)) {
      // Delivered packets are never needed again.
      grads[static_cast<std::size_t>(origin)] = Vector();
      played[static_cast<std::size_t>(origin)] = Vector();
    }
    tr.learning_rate.push_back(learner.diagnostics().learning_rate);
  }
  tr.final_regret = tr.cum_regret.empty() ? 0.0 : tr.cum_regret.back();
  tr.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return tr;
}

RegretTrace run_cell(const TrialContext& trial, const AlgoSpec& algo, const RunOptions& opts) {
  AlgoContext ctx{trial.env->family(), trial.stream->domain(), trial.constants,
                  trial.stream->horizon(), trial.delay_stats.d_tot};
  auto learner = make_learner(algo, ctx);
  return run_cell(trial, *learner, algo.name, opts);
}

std::vector<AggregateRow> aggregate(const std::vector<RegretTrace>& traces) {
  std::vector<std::string> order;
  for (const auto& tr : traces) {
    if (std::find(order.begin(), order.end(), tr.algo) == order.end()) order.push_back(tr.algo);
  }
  std::vector<AggregateRow> rows;
  for (const auto& algo : order) {
    std::vector<const RegretTrace*> group;
    for (const auto& tr : traces) {
      if (tr.algo == algo) group.push_back(&tr);
    }
    const std::size_t T = group.front()->cum_regret.size();
    for (const auto* tr : group) {
      if (tr->cum_regret.size() != T) throw DataError("aggregate: traces of '" + algo + "' differ in length");
    }
    const double k = static_cast<double>(group.size());
    for (std::size_t i = 0; i < T; ++i) {
      CompensatedSum s;
      for (const auto* tr : group) s.add(tr->cum_regret[i]);
      const double mean = s.value() / k;
      CompensatedSum sq;
      for (const auto* tr : group) {
        const double d = tr->cum_regret[i] - mean;
        sq.add(d * d);
      }
      const double sd = group.size() > 1 ? std::sqrt(sq.value() / (k - 1.0)) : 0.0;
      rows.push_back(AggregateRow{algo, static_cast<Round>(i + 1), mean, sd,
                                  static_cast<int>(group.size())});
    }
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& opts) {
  validate(config);
  const EnvironmentSpec env = make_environment_spec(config);
  ComparatorOptions cmp;
  cmp.ridge = config.comparator_ridge;

  ExperimentResult result;
  result.trials.resize(static_cast<std::size_t>(config.trials));
  parallel_for(result.trials.size(), config.workers, [&](std::size_t i) {
    result.trials[i] = make_trial(env, config.delay, config.horizon, config.master_seed,
                                  static_cast<int>(i), cmp);
  });

  const std::size_t n_trials = result.trials.size();
  result.traces.resize(config.algos.size() * n_trials);
  parallel_for(result.traces.size(), config.workers, [&](std::size_t cell) {
    const auto& algo = config.algos[cell / n_trials];
    result.traces[cell] = run_cell(result.trials[cell % n_trials], algo, opts);
  });
  result.aggregate = aggregate(result.traces);
  return result;
}

std::vector<const RegretTrace*> traces_for(const ExperimentResult& result, std::string_view algo) {
  std::vector<const RegretTrace*> out;
  for (const auto& tr : result.traces) {
    if (tr.algo == algo) out.push_back(&tr);
  }
  return out;
}

// ------------------------------------------------------------------- CSV ---

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<RegretTrace>& traces) {
  out << kTraceHeader << '\n';
  for (const auto& tr : traces) {
    const std::string prefix = csv_field(tr.run_id) + ',' + csv_field(tr.algo) + ',' +
                               csv_field(tr.env) + ',' + csv_field(tr.delay_regime) + ',' +
                               std::to_string(tr.seed) + ',';
    for (std::size_t i = 0; i < tr.inst_loss.size(); ++i) {
      out << prefix << (i + 1) << ',' << format_real(tr.inst_loss[i]) << ','
          << format_real(tr.cum_regret[i]) << '\n';
    }
  }
}

void emit_csv(const std::vector<RegretTrace>& traces, const std::filesystem::path& path) {
  if (traces.empty()) throw ConfigError("emit_csv: no traces to write to " + path.string());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_trace_csv(out, traces);
  if (!out) throw IoError("write failed for " + path.string());
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << kAggregateHeader << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.algo) << ',' << r.t << ',' << format_real(r.mean) << ','
        << format_real(r.stddev) << ',' << r.n_trials << '\n';
  }
}

void emit_aggregate_csv(const std::vector<AggregateRow>& rows, const std::filesystem::path& path) {
  if (rows.empty()) throw ConfigError("emit_aggregate_csv: no rows to write to " + path.string());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_aggregate_csv(out, rows);
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::vector<TraceRow> rows;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw ParseError("trace csv: missing or unexpected header", 1);
  }
  ++lineno;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (quoted) {
        if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else if (ch == '"') {
          quoted = false;
        } else {
          cur += ch;
        }
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        fields.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (quoted) throw ParseError("trace csv: unterminated quote", lineno);
    fields.push_back(std::move(cur));
    if (fields.size() != 8) throw ParseError("trace csv: expected 8 fields", lineno);
    TraceRow r;
    r.run_id = fields[0];
    r.algo = fields[1];
    r.env = fields[2];
    r.delay_regime = fields[3];
    try {
      r.seed = std::stoull(fields[4]);
      r.t = std::stoll(fields[5]);
      r.inst_loss = std::stod(fields[6]);
      r.cum_regret = std::stod(fields[7]);
    } catch (const std::exception&) {
      throw ParseError("trace csv: bad numeric field", lineno);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::filesystem::path write_experiment(const ExperimentConfig& config,
                                       const ExperimentResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir = config.out_dir;
  std::error_code ec;
  fs::create_directories(dir / "schedules", ec);
  if (ec) throw IoError("cannot create " + (dir / "schedules").string() + ": " + ec.message());

  emit_csv(result.traces, dir / "traces.csv");
  emit_aggregate_csv(result.aggregate, dir / "aggregate.csv");
  for (const auto& trial : result.trials) {
    write_schedule_file(dir / "schedules" / ("trial-" + std::to_string(trial.trial) + ".txt"),
                        trial.schedule);
  }

  std::ofstream meta(dir / "metadata.txt");
  if (!meta) throw IoError("cannot write " + (dir / "metadata.txt").string());
  meta << "# doco experiment metadata\n";
  meta << "version = " << DOCO_VERSION << '\n';
  meta << "generator = " << kGeneratorId << '\n';
  meta << "seed_derivation = trial seed mix(master_seed, trial) feeds both environment and "
          "schedule; algorithm names feed neither\n";
  if (config.env_settings.contains("dataset")) {
    meta << "dataset_streaming = cyclic (row index (t - 1) mod sample count)\n";
  }
  meta << "\n# config\n" << describe_config(config);
  meta << "\n# trials: seed sigma_max d_max d_tot G D lambda alpha beta Y Z |u*|\n";
  for (const auto& t : result.trials) {
    const auto& c = t.constants;
    meta << "trial " << t.trial << " seed=" << t.trial_seed
         << " sigma_max=" << t.delay_stats.sigma_max << " d_max=" << t.delay_stats.d_max
         << " d_tot=" << t.delay_stats.d_tot << " G=" << format_real(c.g_bound)
         << " D=" << format_real(c.diameter) << (c.nominal_domain ? "(nominal)" : "")
         << " lambda=" << format_real(c.lambda) << " alpha=" << format_real(c.alpha)
         << " beta=" << format_real(c.beta) << " Y=" << format_real(c.y_bound)
         << " Z=" << format_real(c.z_bound) << " |u*|=" << format_real(t.comparator.norm())
         << '\n';
  }
  meta << "\n# runs: run_id final_regret wall_seconds\n";
  for (const auto& tr : result.traces) {
    meta << tr.run_id << ' ' << format_real(tr.final_regret) << ' '
         << format_real(tr.wall_seconds) << '\n';
  }
  if (!meta) throw IoError("write failed for " + (dir / "metadata.txt").string());
  return dir;
}

}  // namespace doco
