#ifndef DOCO_LEARNERS_HPP
#define DOCO_LEARNERS_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "doco/delay_model.hpp"
#include "doco/geometry.hpp"
#include "doco/learner.hpp"

namespace doco {

// ---------------------------------------------------------------------------
// Delayed FTRL for strongly convex losses.
//
// x_{t+1} = argmin_{x in X} sum_{tau in o_{t+1}} <g_tau, x>
//                           + (lambda / 2) sum_{s <= t} ||x - x_s||^2.
// The objective equals (lambda t / 2) ||x - c||^2 + const with
// c = (sum_s x_s - sum_g / lambda) / t, so on a ball the minimizer is the
// Euclidean projection of c.
// ---------------------------------------------------------------------------

struct FtrlScState {
  double lambda = 1.0;
  BallDomain dom;
  Vector sum_x;           // all played points, x_t included once played
  Vector sum_g_observed;  // gradients of o_{t+1}
  Round t = 0;            // rounds played
  Vector x_current;
};

FtrlScState make_ftrl_sc_state(double lambda, const BallDomain& dom);

/// End-of-round update for round state.t; returns x_{t+1}.
Vector ftrl_sc_step(FtrlScState& state, std::span<const GradientPacket> arrived);

class DelayedFtrl final : public OnlineLearner {
 public:
  DelayedFtrl(double lambda, const BallDomain& dom);
  std::string_view name() const override { return "delayed-ftrl"; }
  Vector play(const Vector& features) override;
  void absorb(const FeedbackBatch& batch) override;
  const FtrlScState& state() const { return state_; }

 private:
  FtrlScState state_;
  DelayTracker tracker_;
};

// ---------------------------------------------------------------------------
// Delayed ONS for exp-concave losses.
//
// x_{t+1} = argmin_{x in X} sum_{tau in o_{t+1}} (<g, x> + beta/2 <g, x - x_tau>^2)
//                           + eta_t/2 ||x||^2
// i.e. the A-norm projection of A^{-1} b with A = eta_t I + beta sum g g^T and
// b = sum (beta <g, x_tau> g - g).
// ---------------------------------------------------------------------------

enum class OnsTuning { constant, sqrt_missing, adaptive };

std::string to_string(OnsTuning tuning);
OnsTuning parse_ons_tuning(std::string_view s);

/// beta = min{1 / (4 G D), alpha} / 2.
double ons_beta(double g_bound, double diameter, double alpha);

/// (2 / (G D)) (G^2 + 1/beta) n dmax_perceived ln(1 + beta G^2 T / n).
double ons_adaptive_a(double g_bound, double diameter, double beta, double n,
                      double dmax_perceived, double horizon);

/// (G / D) sqrt(cum_missing + missing_now + 1).
double ons_sqrt_missing(double g_bound, double diameter, double cum_missing, double missing_now);

struct OnsConfig {
  OnsTuning tuning = OnsTuning::adaptive;
  std::optional<double> g_bound;
  std::optional<double> diameter;
  std::optional<double> alpha;
  /// Overrides the (G, D, alpha) rule when set.
  std::optional<double> beta;
  std::optional<Round> horizon;
  double constant_eta = 1.0;
  MahalanobisOptions projection;
};

struct OnsState {
  OnsConfig config;
  double beta = 0.0;
  BallDomain dom;
  Matrix gram;     // sum_{tau in o_{t+1}} g g^T
  Vector b_lin;    // sum_{tau in o_{t+1}} (beta <g, x_tau> g - g)
  double eta = 1.0;
  std::vector<double> eta_history;  // eta_1 .. eta_t
  DelayTracker tracker;
  Vector x_current;
};

/// Validates the configuration and returns the state for round 1 (x_1 = 0).
/// Throws ConfigError for a non-positive eta or missing constants.
OnsState make_ons_state(const OnsConfig& config, const BallDomain& dom);

/// eta_t from the bookkeeping available at the end of round t, made
/// non-decreasing by a running max over previous rounds.
double ons_tune(OnsState& state, Round t);

/// Folds the arrivals in and returns x_{t+1}; state.eta must hold eta_t.
Vector ons_step(OnsState& state, std::span<const GradientPacket> arrived);

class DelayedOns final : public OnlineLearner {
 public:
  DelayedOns(const OnsConfig& config, const BallDomain& dom);
  std::string_view name() const override { return name_; }
  Vector play(const Vector& features) override;
  void absorb(const FeedbackBatch& batch) override;
  RoundDiagnostics diagnostics() const override;
  const OnsState& state() const { return state_; }

 private:
  OnsState state_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Delayed VAW forecaster with clipping (unconstrained online linear
// regression with delayed labels).
// ---------------------------------------------------------------------------

enum class VawTuning { constant, adaptive };

std::string to_string(VawTuning tuning);
VawTuning parse_vaw_tuning(std::string_view s);

/// 2 n dmax_perceived ln(1 + Z^2 T / (gamma n)).
double vaw_adaptive_a(double n, double dmax_perceived, double z_bound, double horizon, double gamma);

/// Z sqrt(cum_missing).
double vaw_adaptive_b(double z_bound, double cum_missing);

struct VawConfig {
  VawTuning tuning = VawTuning::adaptive;
  double gamma = 1.0;
  /// Known feature bound Z; when unset Z_t = max_{tau <= t} ||z_tau|| is used.
  std::optional<double> z_bound;
  std::optional<Round> horizon;
  bool clip = true;
};

struct VawState {
  VawConfig config;
  Eigen::Index dim = 0;
  Matrix gram;   // sum_{tau <= t} z z^T, current feature included
  Vector b_obs;  // sum_{tau in o_t} y z
  double rho = 0.0;
  double z_running = 0.0;
  double eta = 0.0;
  std::vector<double> eta_history;
  DelayTracker tracker;
  Vector x_unclipped;
  Vector x_played;
  double clip_factor = 1.0;
  double rho_at_predict = 0.0;  // rho_t used for the last prediction
};

VawState make_vaw_state(const VawConfig& config, Eigen::Index dim);

/// eta_t at the start of round t (after z_t was observed).
double vaw_tune(VawState& state, Round t);

/// Adds z_t to the covariance, solves with shift state.eta and clips.
Vector vaw_predict(VawState& state, const Vector& features);

/// Folds delayed labels into b_obs and raises rho. Throws DataError on a
/// duplicate origin.
void vaw_absorb(VawState& state, std::span<const LabelPacket> arrived);

class DelayedVaw final : public OnlineLearner {
 public:
  DelayedVaw(const VawConfig& config, Eigen::Index dim);
  std::string_view name() const override { return "delayed-vaw"; }
  Vector play(const Vector& features) override;
  void absorb(const FeedbackBatch& batch) override;
  RoundDiagnostics diagnostics() const override;
  const VawState& state() const { return state_; }

 private:
  VawState state_;
};

// ---------------------------------------------------------------------------
// Delayed OMD for strongly convex losses, eta_t = 2 / (t lambda).
// ---------------------------------------------------------------------------

struct OmdState {
  double lambda = 1.0;
  Round t = 0;
  Vector x_current;
  BallDomain dom;
};

OmdState make_omd_state(double lambda, const BallDomain& dom);

/// x_{t+1} = Proj(x_t - (eta_t / 2) sum_arrived g), i.e. step 1 / (t lambda).
Vector omd_sc_step(OmdState& state, std::span<const GradientPacket> arrived);

class DelayedOmd final : public OnlineLearner {
 public:
  DelayedOmd(double lambda, const BallDomain& dom);
  std::string_view name() const override { return "delayed-omd"; }
  Vector play(const Vector& features) override;
  void absorb(const FeedbackBatch& batch) override;
  const OmdState& state() const { return state_; }

 private:
  OmdState state_;
  DelayTracker tracker_;
};

/// Copies packets sorted by ascending origin; the order every learner folds
/// a batch in.
std::vector<GradientPacket> sorted_by_origin(std::span<const GradientPacket> packets);
std::vector<LabelPacket> sorted_by_origin(std::span<const LabelPacket> packets);

}  // namespace doco

#endif  // DOCO_LEARNERS_HPP
