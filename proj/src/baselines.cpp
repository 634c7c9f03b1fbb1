#include "doco/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace doco {

namespace {

Vector gradient_sum(std::span<const GradientPacket> arrived, Eigen::Index n) {
  Vector g = Vector::Zero(n);
  for (const auto& p : sorted_by_origin(arrived)) g += p.gradient;
  return g;
}

}  // namespace

double dogd_step_size(double diameter, double g_bound, Round horizon, std::int64_t d_tot) {
  if (!(diameter > 0.0) || !(g_bound > 0.0)) {
    throw ConfigError("dogd: step needs D > 0 and G > 0");
  }
  return diameter / (g_bound * std::sqrt(static_cast<double>(horizon + d_tot)));
}

Vector dogd_step(const Vector& x, std::span<const GradientPacket> arrived, double eta,
                 const BallDomain& dom) {
  if (!(eta > 0.0)) throw ConfigError("dogd: field 'eta' must be > 0");
  if (arrived.empty()) return x;
  return project_ball(x - eta * gradient_sum(arrived, x.size()), dom);
}

Dogd::Dogd(double eta, const BallDomain& dom) : eta_(eta), dom_(dom), x_(Vector::Zero(dom.dim)) {
  if (!(eta > 0.0)) throw ConfigError("dogd: field 'eta' must be > 0");
}

Vector Dogd::play(const Vector&) { return x_; }

void Dogd::absorb(const FeedbackBatch& batch) { x_ = dogd_step(x_, batch.gradients, eta_, dom_); }

RoundDiagnostics Dogd::diagnostics() const {
  RoundDiagnostics d;
  d.learning_rate = eta_;
  return d;
}

Vector dogd_sc_step(const Vector& x, std::span<const GradientPacket> arrived, Round t,
                    double lambda, const BallDomain& dom) {
  if (!(lambda > 0.0)) throw ConfigError("dogd-sc: field 'lambda' must be > 0");
  if (t < 1) throw ArgumentError("dogd-sc: round must be >= 1");
  if (arrived.empty()) return x;
  return project_ball(x - gradient_sum(arrived, x.size()) / (lambda * static_cast<double>(t)), dom);
}

DogdSc::DogdSc(double lambda, const BallDomain& dom)
    : lambda_(lambda), dom_(dom), x_(Vector::Zero(dom.dim)) {
  if (!(lambda > 0.0)) throw ConfigError("dogd-sc: field 'lambda' must be > 0");
}

Vector DogdSc::play(const Vector&) {
  ++t_;
  return x_;
}

void DogdSc::absorb(const FeedbackBatch& batch) {
  x_ = dogd_sc_step(x_, batch.gradients, t_, lambda_, dom_);
}

// ----------------------------------------------------------- classic ONS ---

ClassicOns::ClassicOns(double beta, double epsilon, const BallDomain& dom,
                       MahalanobisOptions projection)
    : beta_(beta),
      dom_(dom),
      a_(PsdMatrix::scaled_identity(dom.dim, epsilon)),
      b_(Vector::Zero(dom.dim)),
      x_(Vector::Zero(dom.dim)),
      projection_(projection) {
  if (!(beta > 0.0)) throw ConfigError("ons: field 'beta' must be > 0");
  if (!dom.bounded()) throw ConfigError("ons: requires a bounded domain");
}

Vector ClassicOns::play(const Vector&) { return x_; }

void ClassicOns::absorb(const FeedbackBatch& batch) {
  if (batch.gradients.empty()) return;
  for (const auto& p : sorted_by_origin(batch.gradients)) {
    a_.rank_one_update(p.gradient, beta_);
    b_ += (beta_ * p.gradient.dot(p.played) - 1.0) * p.gradient;
  }
  x_ = project_ball_mahalanobis(solve_psd(a_, b_), a_, dom_, projection_);
}

// ----------------------------------------------------------- classic VAW ---

ClassicVaw::ClassicVaw(double eta, Eigen::Index dim, bool clip)
    : eta_(eta), clip_(clip), a_(PsdMatrix::scaled_identity(dim, eta)), b_(Vector::Zero(dim)) {}

Vector ClassicVaw::play(const Vector& features) {
  a_.rank_one_update(features, 1.0);
  const Vector x = solve_psd(a_, b_);
  const double prediction = std::abs(features.dot(x));
  clip_factor_ = (clip_ && prediction > rho_) ? rho_ / prediction : 1.0;
  return x * clip_factor_;
}

void ClassicVaw::absorb(const FeedbackBatch& batch) {
  for (const auto& p : sorted_by_origin(batch.labels)) {
    b_ += p.label * p.features;
    rho_ = std::max(rho_, std::abs(p.label));
  }
}

RoundDiagnostics ClassicVaw::diagnostics() const {
  RoundDiagnostics d;
  d.learning_rate = eta_;
  d.clip_factor = clip_factor_;
  return d;
}

// ------------------------------------------------------- classic OGD-SC ---

ClassicOgdSc::ClassicOgdSc(double lambda, const BallDomain& dom)
    : lambda_(lambda), dom_(dom), x_(Vector::Zero(dom.dim)) {
  if (!(lambda > 0.0)) throw ConfigError("ogd-sc: field 'lambda' must be > 0");
}

Vector ClassicOgdSc::play(const Vector&) {
  ++t_;
  return x_;
}

void ClassicOgdSc::absorb(const FeedbackBatch& batch) {
  if (batch.gradients.empty()) return;
  x_ = project_ball(x_ - gradient_sum(batch.gradients, x_.size()) /
                             (lambda_ * static_cast<double>(t_)),
                    dom_);
}

// ------------------------------------------------------------------ BOLD ---

std::size_t bold_route(BoldPool& pool, Round t) {
  if (pool.assignment.contains(t)) {
    throw DataError("bold: round " + std::to_string(t) + " already routed");
  }
  std::size_t idx = 0;
  while (idx < pool.busy.size() && pool.busy[idx]) ++idx;
  if (idx == pool.instances.size()) {
    pool.instances.push_back(pool.factory());
    pool.busy.push_back(false);
  }
  pool.busy[idx] = true;
  pool.assignment.emplace(t, idx);
  return idx;
}

void bold_feedback(BoldPool& pool, const FeedbackBatch& single_origin) {
  Round origin = 0;
  if (!single_origin.gradients.empty()) {
    origin = single_origin.gradients.front().origin;
  } else if (!single_origin.labels.empty()) {
    origin = single_origin.labels.front().origin;
  } else {
    throw DataError("bold: empty feedback packet");
  }
  if (single_origin.gradients.size() > 1 || single_origin.labels.size() > 1) {
    throw DataError("bold: duplicate packet for origin " + std::to_string(origin));
  }
  for (const auto& p : single_origin.gradients) {
    if (p.origin != origin) throw DataError("bold: feedback mixes several origins");
  }
  for (const auto& p : single_origin.labels) {
    if (p.origin != origin) throw DataError("bold: feedback mixes several origins");
  }
  const auto it = pool.assignment.find(origin);
  if (it == pool.assignment.end()) {
    throw DataError("bold: origin " + std::to_string(origin) +
                    " has no outstanding assignment (unknown or duplicate)");
  }
  const std::size_t idx = it->second;
  pool.assignment.erase(it);
  pool.instances[idx]->absorb(single_origin);
  pool.busy[idx] = false;
}

Bold::Bold(std::string name, LearnerFactory factory) : name_(std::move(name)) {
  if (!factory) throw ConfigError("bold: missing base factory");
  pool_.factory = std::move(factory);
}

Vector Bold::play(const Vector& features) {
  ++t_;
  last_instance_ = bold_route(pool_, t_);
  return pool_.instances[last_instance_]->play(features);
}

void Bold::absorb(const FeedbackBatch& batch) {
  std::set<Round> origins;
  for (const auto& p : batch.gradients) origins.insert(p.origin);
  for (const auto& p : batch.labels) origins.insert(p.origin);
  for (const Round origin : origins) {
    FeedbackBatch single;
    single.round = batch.round;
    for (const auto& p : batch.gradients) {
      if (p.origin == origin) single.gradients.push_back(p);
    }
    for (const auto& p : batch.labels) {
      if (p.origin == origin) single.labels.push_back(p);
    }
    bold_feedback(pool_, single);
  }
}

}  // namespace doco
