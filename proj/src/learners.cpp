#include "doco/learners.hpp"

#include <algorithm>
#include <cmath>

namespace doco {

namespace {

void record_arrivals(DelayTracker& tracker, std::span<const GradientPacket> packets) {
  for (const auto& p : packets) tracker.record_arrival(p.origin, p.arrival);
}

void check_dim(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw DataError(std::string(what) + ": expected dimension " + std::to_string(n) + ", got " +
                    std::to_string(v.size()));
  }
}

}  // namespace

std::vector<GradientPacket> sorted_by_origin(std::span<const GradientPacket> packets) {
  std::vector<GradientPacket> out(packets.begin(), packets.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.origin < b.origin; });
  return out;
}

std::vector<LabelPacket> sorted_by_origin(std::span<const LabelPacket> packets) {
  std::vector<LabelPacket> out(packets.begin(), packets.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.origin < b.origin; });
  return out;
}

// ----------------------------------------------------------------- FTRL ---

FtrlScState make_ftrl_sc_state(double lambda, const BallDomain& dom) {
  if (!(lambda > 0.0)) throw ConfigError("delayed ftrl: field 'lambda' must be > 0");
  FtrlScState s;
  s.lambda = lambda;
  s.dom = dom;
  s.sum_x = Vector::Zero(dom.dim);
  s.sum_g_observed = Vector::Zero(dom.dim);
  s.x_current = Vector::Zero(dom.dim);
  return s;
}

Vector ftrl_sc_step(FtrlScState& state, std::span<const GradientPacket> arrived) {
  if (!(state.lambda > 0.0)) throw ConfigError("delayed ftrl: field 'lambda' must be > 0");
  if (state.t < 1) throw SequencingError("delayed ftrl: step before any round was played");
  for (const auto& p : sorted_by_origin(arrived)) {
    check_dim(p.gradient, state.dom.dim, "delayed ftrl gradient");
    state.sum_g_observed += p.gradient;
  }
  const Vector centroid =
      (state.sum_x - state.sum_g_observed / state.lambda) / static_cast<double>(state.t);
  state.x_current = project_ball(centroid, state.dom);
  return state.x_current;
}

DelayedFtrl::DelayedFtrl(double lambda, const BallDomain& dom)
    : state_(make_ftrl_sc_state(lambda, dom)) {}

Vector DelayedFtrl::play(const Vector&) {
  tracker_.start_round(tracker_.round() + 1);
  state_.t = tracker_.round();
  state_.sum_x += state_.x_current;
  return state_.x_current;
}

void DelayedFtrl::absorb(const FeedbackBatch& batch) {
  record_arrivals(tracker_, batch.gradients);
  ftrl_sc_step(state_, batch.gradients);
}

// ------------------------------------------------------------------ ONS ---

std::string to_string(OnsTuning tuning) {
  switch (tuning) {
    case OnsTuning::constant:
      return "constant";
    case OnsTuning::sqrt_missing:
      return "sqrt_missing";
    case OnsTuning::adaptive:
      return "adaptive";
  }
  return "?";
}

OnsTuning parse_ons_tuning(std::string_view s) {
  if (s == "constant") return OnsTuning::constant;
  if (s == "sqrt_missing" || s == "sqrt") return OnsTuning::sqrt_missing;
  if (s == "adaptive") return OnsTuning::adaptive;
  throw ConfigError("ons: unknown tuning '" + std::string(s) + "'");
}

double ons_beta(double g_bound, double diameter, double alpha) {
  const double gd = g_bound * diameter;
  const double inv = gd > 0.0 ? 1.0 / (4.0 * gd) : std::numeric_limits<double>::infinity();
  return 0.5 * std::min(inv, alpha);
}

double ons_adaptive_a(double g_bound, double diameter, double beta, double n,
                      double dmax_perceived, double horizon) {
  return 2.0 / (g_bound * diameter) * (g_bound * g_bound + 1.0 / beta) * n * dmax_perceived *
         std::log1p(beta * g_bound * g_bound * horizon / n);
}

double ons_sqrt_missing(double g_bound, double diameter, double cum_missing, double missing_now) {
  return g_bound / diameter * std::sqrt(cum_missing + missing_now + 1.0);
}

OnsState make_ons_state(const OnsConfig& config, const BallDomain& dom) {
  if (!dom.bounded()) {
    throw ConfigError("delayed ons: requires a bounded domain (got an unconstrained one)");
  }
  OnsState s;
  s.config = config;
  s.dom = dom;
  if (config.beta) {
    if (!(*config.beta > 0.0)) throw ConfigError("delayed ons: field 'beta' must be > 0");
    s.beta = *config.beta;
  } else {
    if (!config.g_bound || !config.diameter || !config.alpha) {
      throw ConfigError("delayed ons: fields 'G', 'D' and 'alpha' are required to derive beta");
    }
    if (!(*config.alpha > 0.0)) throw ConfigError("delayed ons: field 'alpha' must be > 0");
    s.beta = ons_beta(*config.g_bound, *config.diameter, *config.alpha);
  }
  switch (config.tuning) {
    case OnsTuning::constant:
      if (!(config.constant_eta > 0.0)) {
        throw ConfigError("delayed ons: field 'eta' must be > 0");
      }
      s.eta = config.constant_eta;
      break;
    case OnsTuning::adaptive:
      if (!config.horizon || *config.horizon < 1) {
        throw ConfigError("delayed ons: field 'T' is required for the adaptive tuning");
      }
      [[fallthrough]];
    case OnsTuning::sqrt_missing:
      if (!config.g_bound || !(*config.g_bound > 0.0)) {
        throw ConfigError("delayed ons: field 'G' must be set and > 0 for tuning " +
                          to_string(config.tuning));
      }
      if (!config.diameter || !(*config.diameter > 0.0)) {
        throw ConfigError("delayed ons: field 'D' must be set and > 0 for tuning " +
                          to_string(config.tuning));
      }
      s.eta = config.tuning == OnsTuning::adaptive ? 1.0 : *config.g_bound / *config.diameter;
      break;
  }
  s.gram = Matrix::Zero(dom.dim, dom.dim);
  s.b_lin = Vector::Zero(dom.dim);
  s.x_current = Vector::Zero(dom.dim);
  return s;
}

double ons_tune(OnsState& state, Round t) {
  if (state.tracker.round() != t) {
    throw SequencingError("ons_tune: bookkeeping is at round " +
                          std::to_string(state.tracker.round()) + ", asked for " +
                          std::to_string(t));
  }
  const auto& cfg = state.config;
  double raw = cfg.constant_eta;
  if (cfg.tuning != OnsTuning::constant) {
    const double g = *cfg.g_bound;
    const double d = *cfg.diameter;
    const double b = ons_sqrt_missing(g, d, static_cast<double>(state.tracker.cumulative_missing()),
                                      static_cast<double>(state.tracker.missing_count()));
    if (cfg.tuning == OnsTuning::sqrt_missing) {
      raw = b;
    } else {
      const double a = ons_adaptive_a(g, d, state.beta, static_cast<double>(state.dom.dim),
                                      static_cast<double>(state.tracker.perceived_dmax()),
                                      static_cast<double>(*cfg.horizon));
      raw = std::min(a, b) + 1.0;
    }
  }
  // |m_t| + 1 in the sqrt rule can shrink between rounds; the running max
  // keeps eta_0 <= eta_1 <= ... as the regret analysis requires.
  const double floor = state.eta_history.empty() ? raw : state.eta_history.back();
  state.eta = std::max(raw, floor);
  state.eta_history.push_back(state.eta);
  return state.eta;
}

Vector ons_step(OnsState& state, std::span<const GradientPacket> arrived) {
  if (!(state.eta > 0.0)) throw ConfigError("delayed ons: eta must be > 0 (singular A)");
  for (const auto& p : sorted_by_origin(arrived)) {
    check_dim(p.gradient, state.dom.dim, "delayed ons gradient");
    check_dim(p.played, state.dom.dim, "delayed ons played point");
    state.gram.noalias() += p.gradient * p.gradient.transpose();
    state.b_lin += (state.beta * p.gradient.dot(p.played) - 1.0) * p.gradient;
  }
  Matrix a = state.beta * state.gram;
  a.diagonal().array() += state.eta;
  const PsdMatrix am(std::move(a));
  const Vector x_star = solve_psd(am, state.b_lin);
  state.x_current = project_ball_mahalanobis(x_star, am, state.dom, state.config.projection);
  return state.x_current;
}

DelayedOns::DelayedOns(const OnsConfig& config, const BallDomain& dom)
    : state_(make_ons_state(config, dom)), name_("delayed-ons-" + to_string(config.tuning)) {}

Vector DelayedOns::play(const Vector&) {
  state_.tracker.start_round(state_.tracker.round() + 1);
  return state_.x_current;
}

void DelayedOns::absorb(const FeedbackBatch& batch) {
  record_arrivals(state_.tracker, batch.gradients);
  ons_tune(state_, state_.tracker.round());
  ons_step(state_, batch.gradients);
}

RoundDiagnostics DelayedOns::diagnostics() const {
  RoundDiagnostics d;
  d.learning_rate = state_.eta;
  return d;
}

// ------------------------------------------------------------------ VAW ---

std::string to_string(VawTuning tuning) {
  return tuning == VawTuning::constant ? "constant" : "adaptive";
}

VawTuning parse_vaw_tuning(std::string_view s) {
  if (s == "constant") return VawTuning::constant;
  if (s == "adaptive") return VawTuning::adaptive;
  throw ConfigError("vaw: unknown tuning '" + std::string(s) + "'");
}

double vaw_adaptive_a(double n, double dmax_perceived, double z_bound, double horizon,
                      double gamma) {
  return 2.0 * n * dmax_perceived * std::log1p(z_bound * z_bound * horizon / (gamma * n));
}

double vaw_adaptive_b(double z_bound, double cum_missing) { return z_bound * std::sqrt(cum_missing); }

VawState make_vaw_state(const VawConfig& config, Eigen::Index dim) {
  if (!(config.gamma > 0.0)) throw ConfigError("delayed vaw: field 'gamma' must be > 0");
  if (config.z_bound && !(*config.z_bound >= 0.0)) {
    throw ConfigError("delayed vaw: field 'Z' must be >= 0");
  }
  if (config.tuning == VawTuning::adaptive && (!config.horizon || *config.horizon < 1)) {
    throw ConfigError("delayed vaw: field 'T' is required for the adaptive tuning");
  }
  VawState s;
  s.config = config;
  s.dim = dim;
  s.gram = Matrix::Zero(dim, dim);
  s.b_obs = Vector::Zero(dim);
  s.eta = config.gamma;
  s.x_unclipped = Vector::Zero(dim);
  s.x_played = Vector::Zero(dim);
  return s;
}

double vaw_tune(VawState& state, Round t) {
  if (state.tracker.round() != t) {
    throw SequencingError("vaw_tune: bookkeeping is at round " +
                          std::to_string(state.tracker.round()) + ", asked for " +
                          std::to_string(t));
  }
  const auto& cfg = state.config;
  double raw = cfg.gamma;
  if (cfg.tuning == VawTuning::adaptive) {
    const double z = cfg.z_bound.value_or(state.z_running);
    const double a = vaw_adaptive_a(static_cast<double>(state.dim),
                                    static_cast<double>(state.tracker.perceived_dmax()), z,
                                    static_cast<double>(*cfg.horizon), cfg.gamma);
    const double b = vaw_adaptive_b(z, static_cast<double>(state.tracker.cumulative_missing()));
    raw = cfg.gamma * (std::min(a, b) + 1.0);
  }
  const double floor = state.eta_history.empty() ? raw : state.eta_history.back();
  state.eta = std::max(raw, floor);
  state.eta_history.push_back(state.eta);
  return state.eta;
}

Vector vaw_predict(VawState& state, const Vector& features) {
  check_dim(features, state.dim, "delayed vaw features");
  if (!(state.eta > 0.0)) throw ConfigError("delayed vaw: eta must be > 0");
  state.gram.noalias() += features * features.transpose();
  Matrix a = state.gram;
  a.diagonal().array() += state.eta;
  state.x_unclipped = solve_psd(PsdMatrix(std::move(a)), state.b_obs);
  const double prediction = std::abs(features.dot(state.x_unclipped));
  // Factor 1 when the prediction is already inside [-rho, rho]; this also
  // covers the 0/0 case.
  state.clip_factor = 1.0;
  state.rho_at_predict = state.rho;
  if (state.config.clip && prediction > state.rho) state.clip_factor = state.rho / prediction;
  state.x_played = state.x_unclipped * state.clip_factor;
  return state.x_played;
}

void vaw_absorb(VawState& state, std::span<const LabelPacket> arrived) {
  for (const auto& p : sorted_by_origin(arrived)) {
    check_dim(p.features, state.dim, "delayed vaw label features");
    state.tracker.record_arrival(p.origin, p.arrival);
    state.b_obs += p.label * p.features;
    state.rho = std::max(state.rho, std::abs(p.label));
  }
}

DelayedVaw::DelayedVaw(const VawConfig& config, Eigen::Index dim)
    : state_(make_vaw_state(config, dim)) {}

Vector DelayedVaw::play(const Vector& features) {
  state_.tracker.start_round(state_.tracker.round() + 1);
  state_.z_running = std::max(state_.z_running, features.norm());
  vaw_tune(state_, state_.tracker.round());
  return vaw_predict(state_, features);
}

void DelayedVaw::absorb(const FeedbackBatch& batch) { vaw_absorb(state_, batch.labels); }

RoundDiagnostics DelayedVaw::diagnostics() const {
  RoundDiagnostics d;
  d.learning_rate = state_.eta;
  d.clip_factor = state_.clip_factor;
  d.clip_level = state_.rho_at_predict;
  return d;
}

// ------------------------------------------------------------------ OMD ---

OmdState make_omd_state(double lambda, const BallDomain& dom) {
  if (!(lambda > 0.0)) throw ConfigError("delayed omd: field 'lambda' must be > 0");
  OmdState s;
  s.lambda = lambda;
  s.dom = dom;
  s.x_current = Vector::Zero(dom.dim);
  return s;
}

Vector omd_sc_step(OmdState& state, std::span<const GradientPacket> arrived) {
  if (!(state.lambda > 0.0)) throw ConfigError("delayed omd: field 'lambda' must be > 0");
  if (state.t < 1) throw SequencingError("delayed omd: step before any round was played");
  Vector g_sum = Vector::Zero(state.dom.dim);
  for (const auto& p : sorted_by_origin(arrived)) {
    check_dim(p.gradient, state.dom.dim, "delayed omd gradient");
    g_sum += p.gradient;
  }
  const double eta = 2.0 / (static_cast<double>(state.t) * state.lambda);
  state.x_current = project_ball(state.x_current - 0.5 * eta * g_sum, state.dom);
  return state.x_current;
}

DelayedOmd::DelayedOmd(double lambda, const BallDomain& dom) : state_(make_omd_state(lambda, dom)) {}

Vector DelayedOmd::play(const Vector&) {
  tracker_.start_round(tracker_.round() + 1);
  state_.t = tracker_.round();
  return state_.x_current;
}

void DelayedOmd::absorb(const FeedbackBatch& batch) {
  record_arrivals(tracker_, batch.gradients);
  omd_sc_step(state_, batch.gradients);
}

}  // namespace doco
