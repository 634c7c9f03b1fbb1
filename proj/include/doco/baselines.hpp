#ifndef DOCO_BASELINES_HPP
#define DOCO_BASELINES_HPP

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "doco/geometry.hpp"
#include "doco/learner.hpp"
#include "doco/learners.hpp"

namespace doco {

// Delayed online gradient descent with a fixed step,
// eta = D / (G sqrt(T + d_tot)).
double dogd_step_size(double diameter, double g_bound, Round horizon, std::int64_t d_tot);

Vector dogd_step(const Vector& x, std::span<const GradientPacket> arrived, double eta,
                 const BallDomain& dom);

class Dogd final : public OnlineLearner {
 public:
  Dogd(double eta, const BallDomain& dom);
  std::string_view name() const override { return "dogd"; }
  Vector play(const Vector& features) override;
  void absorb(const FeedbackBatch& batch) override;
  RoundDiagnostics diagnostics() const override;

 private:
  double eta_;
  BallDomain dom_;
  Vector x_;
};

// DOGD-SC: every gradient arriving at round t is applied with step 1/(lambda t).
Vector dogd_sc_step(const Vector& x, std::span<const GradientPacket> arrived, Round t,
                    double lambda, const BallDomain& dom);

class DogdSc final : public OnlineLearner {
 public:
  DogdSc(double lambda, const BallDomain& dom);
  std::string_view name() const override { return "dogd-sc"; }
  Vector play(const Vector& features) override;
  void absorb(const FeedbackBatch& batch) override;

 private:
  double lambda_;
  BallDomain dom_;
  Vector x_;
  Round t_ = 0;
};

// SDMD-RSC is the delayed OMD update.
using SdmdRsc = DelayedOmd;
inline Vector sdmd_rsc_step(OmdState& state, std::span<const GradientPacket> arrived) {
  return omd_sc_step(state, arrived);
}

// ---------------------------------------------------------------------------
// Classic (undelayed) learners used as BOLD bases. Each one assumes the
// feedback it absorbs belongs to its own latest play.
// ---------------------------------------------------------------------------

/// ONS in FTRL form: A_t = eps I + beta sum g g^T, b_t = sum (beta <g,x> g - g),
/// x_{t+1} = A-norm projection of A_t^{-1} b_t. Inverse kept by Sherman-Morrison.
class ClassicOns final : public OnlineLearner {
 public:
  ClassicOns(double beta, double epsilon, const BallDomain& dom, MahalanobisOptions projection = {});
  std::string_view name() const override { return "ons"; }
  Vector play(const Vector& features) override;
  void absorb(const FeedbackBatch& batch) override;

 private:
  double beta_;
  BallDomain dom_;
  PsdMatrix a_;
  Vector b_;
  Vector x_;
  MahalanobisOptions projection_;
};

/// VAW forecaster: A_t = eta I + sum_{tau <= t} z z^T, x_t = A_t^{-1} sum y z,
/// optionally clipped to the largest label seen so far.
class ClassicVaw final : public OnlineLearner {
 public:
  ClassicVaw(double eta, Eigen::Index dim, bool clip = false);
  std::string_view name() const override { return "vaw"; }
  Vector play(const Vector& features) override;
  void absorb(const FeedbackBatch& batch) override;
  RoundDiagnostics diagnostics() const override;

 private:
  double eta_;
  bool clip_;
  PsdMatrix a_;
  Vector b_;
  double rho_ = 0.0;
  double clip_factor_ = 1.0;
};

/// Projected OGD with step 1/(lambda t) on the learner's own timeline.
class ClassicOgdSc final : public OnlineLearner {
 public:
  ClassicOgdSc(double lambda, const BallDomain& dom);
  std::string_view name() const override { return "ogd-sc"; }
  Vector play(const Vector& features) override;
  void absorb(const FeedbackBatch& batch) override;

 private:
  double lambda_;
  BallDomain dom_;
  Vector x_;
  Round t_ = 0;
};

// ---------------------------------------------------------------------------
// BOLD: a pool of undelayed base learners. Round t goes to the lowest-index
// instance with no outstanding feedback; each instance therefore sees its
// feedback before it plays again.
// ---------------------------------------------------------------------------

using LearnerFactory = std::function<std::unique_ptr<OnlineLearner>()>;

struct BoldPool {
  LearnerFactory factory;
  std::vector<std::unique_ptr<OnlineLearner>> instances;
  std::vector<bool> busy;
  std::unordered_map<Round, std::size_t> assignment;  // outstanding rounds only
};

std::size_t bold_route(BoldPool& pool, Round t);

/// Feedback for one origin (gradient and/or label packet with that origin).
/// Throws DataError for an origin that is not outstanding.
void bold_feedback(BoldPool& pool, const FeedbackBatch& single_origin);

class Bold final : public OnlineLearner {
 public:
  Bold(std::string name, LearnerFactory factory);
  std::string_view name() const override { return name_; }
  Vector play(const Vector& features) override;
  void absorb(const FeedbackBatch& batch) override;
  std::size_t pool_size() const { return pool_.instances.size(); }
  std::size_t last_instance() const { return last_instance_; }

 private:
  std::string name_;
  BoldPool pool_;
  Round t_ = 0;
  std::size_t last_instance_ = 0;
};

}  // namespace doco

#endif  // DOCO_BASELINES_HPP
