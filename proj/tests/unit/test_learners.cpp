#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>

#include "doco/delay_model.hpp"
#include "doco/learners.hpp"
#include "oracles.hpp"

using namespace doco;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const double x : v) out(i++) = x;
  return out;
}

FeedbackBatch gradients(Round t, std::vector<std::pair<Round, Vector>> gs, const Vector& played) {
  FeedbackBatch b;
  b.round = t;
  for (auto& [origin, g] : gs) b.gradients.push_back({origin, g, played, t});
  return b;
}

FeedbackBatch labels(Round t, std::vector<std::tuple<Round, double, Vector>> ls) {
  FeedbackBatch b;
  b.round = t;
  for (auto& [origin, y, z] : ls) b.labels.push_back({origin, y, z, t});
  return b;
}

// Drives a learner on a synthetic squared-loss stream with the given schedule.
struct Drive {
  std::vector<Vector> z;
  std::vector<double> y;
  std::vector<Vector> x;
  std::vector<Vector> g;
};

Drive drive(OnlineLearner& learner, const DelaySchedule& s, std::uint64_t seed, Eigen::Index n,
            double ridge, const std::function<void(Round, const OnlineLearner&)>& after_play = {},
            bool shuffle = false) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> noise;
  std::mt19937_64 perm(seed ^ 0x5eed);
  Drive d;
  const ArrivalIndex index(s);
  for (Round t = 1; t <= s.horizon(); ++t) {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = u(eng);
    const double y = z.sum() + noise(eng);
    const Vector x = learner.play(z);
    if (after_play) after_play(t, learner);
    Vector g = (z.dot(x) - y) * z + ridge * x;
    d.z.push_back(z);
    d.y.push_back(y);
    d.x.push_back(x);
    d.g.push_back(g);
    FeedbackBatch b;
    b.round = t;
    for (const auto tau : index.at(t)) {
      const auto i = static_cast<std::size_t>(tau - 1);
      b.gradients.push_back({tau, d.g[i], d.x[i], t});
      b.labels.push_back({tau, d.y[i], d.z[i], t});
    }
    if (shuffle) {
      std::shuffle(b.gradients.begin(), b.gradients.end(), perm);
      std::shuffle(b.labels.begin(), b.labels.end(), perm);
    }
    learner.absorb(b);
  }
  return d;
}

OnsConfig ons_config(OnsTuning tuning, Round T) {
  OnsConfig c;
  c.tuning = tuning;
  c.g_bound = 7.0;
  c.diameter = 4.0;
  c.alpha = 1.0 / 16.0;
  c.horizon = T;
  return c;
}

double grid_min_on_disc(const std::function<double(const Vector&)>& f, double radius, Vector& arg) {
  // Polar grid over the disc, fine enough for 1e-4 in the argmin.
  double best = 1e300;
  const int nr = 1500;
  const int nt = 6000;
  for (int i = 0; i <= nr; ++i) {
    const double r = radius * i / nr;
    for (int j = 0; j < nt; ++j) {
      const double th = 2.0 * std::numbers::pi * j / nt;
      const Vector x = vec({r * std::cos(th), r * std::sin(th)});
      const double v = f(x);
      if (v < best) {
        best = v;
        arg = x;
      }
    }
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------- FTRL ---

TEST_CASE("delayed FTRL examples") {
  const BallDomain dom{2, 2.0};
  {
    DelayedFtrl L(1.0, dom);
    CHECK(L.play(vec({0, 0})) == vec({0, 0}));
    L.absorb(gradients(1, {{1, vec({1, 0})}}, vec({0, 0})));
    CHECK((L.play(vec({0, 0})) - vec({-1, 0})).norm() < 1e-15);
  }
  {
    DelayedFtrl L(1.0, dom);
    L.play(vec({0, 0}));
    L.absorb(gradients(1, {}, vec({0, 0})));
    CHECK(L.play(vec({0, 0})) == vec({0, 0}));
  }
  {
    DelayedFtrl L(1.0, dom);
    L.play(vec({0, 0}));
    L.absorb(gradients(1, {{1, vec({10, 0})}}, vec({0, 0})));
    CHECK((L.play(vec({0, 0})) - vec({-2, 0})).norm() < 1e-15);
  }
}

TEST_CASE("delayed FTRL example agrees with a numeric minimizer") {
  const auto f = [](const Vector& x) { return x(0) + 0.5 * x.squaredNorm(); };
  const auto g = [](const Vector& x) -> Vector { return vec({1, 0}) + x; };
  const Vector ref = oracle::minimize(f, g, Vector::Zero(2), 2.0);
  CHECK((ref - vec({-1, 0})).norm() < 1e-6);
}

TEST_CASE("delayed FTRL keeps exact running sums") {
  DelayedFtrl L(0.7, {3, 1.5});
  const auto s = realize_schedule({DelayRegime::uniform(0, 4), 3}, 60);
  const auto d = drive(L, s, 1, 3, 1.0);
  Vector sum = Vector::Zero(3);
  for (const auto& x : d.x) sum += x;
  CHECK((L.state().sum_x - sum).norm() <= 1e-12);
  CHECK(L.state().x_current.norm() <= 1.5 + 1e-12);
}

TEST_CASE("delayed FTRL rejects lambda <= 0") {
  CHECK_THROWS_AS(DelayedFtrl(0.0, {2, 1.0}), ConfigError);
  CHECK_THROWS_AS(DelayedFtrl(-1.0, {2, 1.0}), ConfigError);
}

// ----------------------------------------------------------------- ONS ---

TEST_CASE("ONS step examples") {
  OnsConfig c;
  c.tuning = OnsTuning::constant;
  c.beta = 1.0;
  {
    auto st = make_ons_state(c, {2, 2.0});
    CHECK(ons_step(st, {}) == vec({0, 0}));
  }
  {
    auto st = make_ons_state(c, {2, 2.0});
    const std::vector<GradientPacket> p = {{1, vec({1, 0}), vec({0, 0}), 1}};
    const Vector x = ons_step(st, p);
    CHECK((x - vec({-0.5, 0})).norm() < 1e-12);
    CHECK((st.gram - vec({1, 0}) * vec({1, 0}).transpose()).norm() == 0.0);
    CHECK((st.b_lin - vec({-1, 0})).norm() == 0.0);
  }
  {
    auto st = make_ons_state(c, {2, 0.25});
    const std::vector<GradientPacket> p = {{1, vec({1, 0}), vec({0, 0}), 1}};
    const Vector x = ons_step(st, p);
    // Surrogate: <g, x> + (1/2)<g, x>^2 + (1/2)||x||^2.
    const auto f = [](const Vector& v) { return v(0) + 0.5 * v(0) * v(0) + 0.5 * v.squaredNorm(); };
    Vector arg;
    grid_min_on_disc(f, 0.25, arg);
    CHECK((x - arg).norm() < 1e-4);
    CHECK(x.norm() <= 0.25 + 1e-12);
  }
}

TEST_CASE("ONS tuning formulas") {
  // G = D = n = beta = 1 and T = e - 1 make the logarithm equal to 1.
  CHECK(ons_adaptive_a(1, 1, 1, 1, 1, std::numbers::e - 1.0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(ons_adaptive_a(1, 1, 1, 1, 0, 100.0) == 0.0);
  CHECK(ons_sqrt_missing(3, 3, 0, 0) == 1.0);
  CHECK(ons_sqrt_missing(2, 1, 5, 3) == doctest::Approx(6.0));
  CHECK(ons_beta(1, 1, 1) == doctest::Approx(0.125));
  CHECK(ons_beta(10, 10, 0.01) == doctest::Approx(0.00125));
  CHECK(ons_beta(1, 1, 0.1) == doctest::Approx(0.05));
}

TEST_CASE("ONS tunings on instantaneous feedback") {
  const Round T = 50;
  const auto none = realize_schedule({DelayRegime::fixed(0), 1}, T);
  {
    // Adaptive: d_max^{<=t} = 0 so a_t = 0 and eta_t = 1.
    DelayedOns L(ons_config(OnsTuning::adaptive, T), {3, 2.0});
    drive(L, none, 2, 3, 0.0, [](Round, const OnlineLearner& l) { CHECK(l.diagnostics().learning_rate == 1.0); });
  }
  {
    // sqrt_missing with G = D and nothing missing: eta_t = 1.
    auto c = ons_config(OnsTuning::sqrt_missing, T);
    c.diameter = c.g_bound;
    DelayedOns L(c, {3, 2.0});
    drive(L, none, 3, 3, 0.0, [](Round, const OnlineLearner& l) { CHECK(l.diagnostics().learning_rate == 1.0); });
  }
}

TEST_CASE("ONS adaptive eta follows min(a, b) + 1 on a delayed schedule") {
  const Round T = 80;
  const auto s = realize_schedule({DelayRegime::uniform(0, 6), 4}, T);
  const auto c = ons_config(OnsTuning::adaptive, T);
  DelayedOns L(c, {3, 2.0});
  const double beta = ons_beta(*c.g_bound, *c.diameter, *c.alpha);
  const oracle::Delays d(s.delays().begin(), s.delays().end());
  double prev = 0.0;
  drive(L, s, 5, 3, 0.0, [&](Round t, const OnlineLearner& l) {
    if (t == 1) return;
    // eta reported at round t was set at the end of round t - 1.
    const Round r = t - 1;
    double cum = 0.0;
    for (Round q = 1; q <= r; ++q) cum += static_cast<double>(oracle::missing(d, q).size());
    const auto m = static_cast<double>(oracle::missing(d, r).size());
    const double a = 2.0 / (7.0 * 4.0) * (49.0 + 1.0 / beta) * 3.0 *
                     static_cast<double>(oracle::perceived_dmax(d, r)) * std::log1p(beta * 49.0 * T / 3.0);
    const double b = 7.0 / 4.0 * std::sqrt(cum + m + 1.0);
    const double expect = std::max(prev, std::min(a, b) + 1.0);
    CHECK(l.diagnostics().learning_rate == doctest::Approx(expect).epsilon(1e-12));
    prev = expect;
  });
}

TEST_CASE("ONS configuration errors") {
  OnsConfig c;
  c.tuning = OnsTuning::adaptive;
  CHECK_THROWS_AS(make_ons_state(c, {2, 1.0}), ConfigError);  // G, D, alpha, T unset
  auto ok = ons_config(OnsTuning::adaptive, 10);
  CHECK_THROWS_AS(make_ons_state(ok, BallDomain::unconstrained(2)), ConfigError);
  ok.horizon.reset();
  CHECK_THROWS_AS(make_ons_state(ok, {2, 1.0}), ConfigError);
  OnsConfig k;
  k.tuning = OnsTuning::constant;
  k.beta = 1.0;
  k.constant_eta = 0.0;
  CHECK_THROWS_AS(make_ons_state(k, {2, 1.0}), ConfigError);
}

// ----------------------------------------------------------------- VAW ---

TEST_CASE("VAW cold start plays zero") {
  VawConfig c;
  c.tuning = VawTuning::constant;
  DelayedVaw L(c, 2);
  CHECK(L.play(vec({1, 2})) == vec({0, 0}));
  CHECK(L.state().rho == 0.0);
}

TEST_CASE("VAW second round solves with the current feature included") {
  VawConfig c;
  c.tuning = VawTuning::constant;
  c.gamma = 1.0;
  DelayedVaw L(c, 2);
  L.play(vec({1, 0}));
  L.absorb(labels(1, {{1, 1.0, vec({1, 0})}}));
  const Vector x = L.play(vec({1, 0}));
  CHECK((L.state().x_unclipped - vec({1.0 / 3.0, 0})).norm() < 1e-15);
  CHECK(x == L.state().x_unclipped);
  CHECK(L.diagnostics().clip_factor == 1.0);
  CHECK(L.state().rho == 1.0);
}

TEST_CASE("VAW clipping scales the prediction to rho") {
  VawConfig c;
  c.tuning = VawTuning::constant;
  auto st = make_vaw_state(c, 2);
  st.eta = 1.0;
  st.rho = 0.5;
  st.b_obs = vec({2, 0});  // A = diag(2, 1) after adding z z^T, so x = (1, 0)
  const Vector x = vaw_predict(st, vec({1, 0}));
  CHECK((st.x_unclipped - vec({1, 0})).norm() < 1e-15);
  CHECK(st.clip_factor == doctest::Approx(0.5));
  CHECK(std::abs(vec({1, 0}).dot(x)) == doctest::Approx(0.5));

  // Without clipping the forecaster is returned as is.
  c.clip = false;
  auto raw = make_vaw_state(c, 2);
  raw.eta = 1.0;
  raw.rho = 0.5;
  raw.b_obs = vec({2, 0});
  CHECK(vaw_predict(raw, vec({1, 0})) == raw.x_unclipped);
}

TEST_CASE("VAW absorb keeps a running max and is order independent") {
  VawConfig c;
  c.tuning = VawTuning::constant;
  DelayedVaw L(c, 2);
  for (int t = 1; t <= 6; ++t) {
    L.play(vec({0.1 * t, 1}));
    if (t == 1) L.absorb(labels(1, {{1, 1.0, vec({0.1, 1})}}));
    else L.absorb(labels(t, {}));
  }
  CHECK(L.state().rho == 1.0);
  L.play(vec({1, 1}));
  L.absorb(labels(7, {{2, 0.2, vec({0.2, 1})}, {3, -3.0, vec({0.3, 1})}}));
  CHECK(L.state().rho == 3.0);

  // Origins 5 then 2 versus 2 then 5.
  const auto run = [&](bool reversed) {
    DelayedVaw M(c, 2);
    for (int t = 1; t <= 5; ++t) {
      M.play(vec({0.1 * t, 1}));
      M.absorb(labels(t, {}));
    }
    M.play(vec({1, 1}));
    std::vector<std::tuple<Round, double, Vector>> ls = {{5, 0.7, vec({0.5, 1})}, {2, -1.3, vec({0.2, 1})}};
    if (reversed) std::reverse(ls.begin(), ls.end());
    M.absorb(labels(6, ls));
    return M.state().b_obs;
  };
  CHECK(run(false) == run(true));
}

TEST_CASE("VAW rejects duplicate label origins") {
  VawConfig c;
  c.tuning = VawTuning::constant;
  DelayedVaw L(c, 1);
  L.play(vec({1}));
  L.absorb(labels(1, {{1, 1.0, vec({1})}}));
  L.play(vec({1}));
  CHECK_THROWS_AS(L.absorb(labels(2, {{1, 1.0, vec({1})}})), DataError);
}

TEST_CASE("VAW tuning formulas") {
  CHECK(vaw_adaptive_a(1, 0, 3, 100, 1) == 0.0);
  CHECK(vaw_adaptive_b(3, 0) == 0.0);
  // n = 1, d = 1, Z^2 T / (gamma n) = e - 1.
  CHECK(vaw_adaptive_a(1, 1, 1, std::numbers::e - 1.0, 1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(vaw_adaptive_b(2, 25) == doctest::Approx(10.0));
  // No delay perceived and nothing missing: eta_t = gamma.
  VawConfig c;
  c.gamma = 0.7;
  c.horizon = 20;
  DelayedVaw L(c, 2);
  drive(L, realize_schedule({DelayRegime::fixed(0), 1}, 20), 6, 2, 0.0,
        [](Round, const OnlineLearner& l) { CHECK(l.diagnostics().learning_rate == 0.7); });
}

TEST_CASE("VAW configuration errors") {
  VawConfig c;
  c.gamma = 0.0;
  CHECK_THROWS_AS(make_vaw_state(c, 2), ConfigError);
  VawConfig d;
  d.tuning = VawTuning::adaptive;
  CHECK_THROWS_AS(make_vaw_state(d, 2), ConfigError);  // horizon unset
}

TEST_CASE("VAW clipping invariant on random delayed streams") {
  std::mt19937_64 eng(7);
  int clipped = 0;
  for (int k = 0; k < 100; ++k) {
    const Round T = 150;
    const auto s = realize_schedule({DelayRegime::uniform(0, 5), eng()}, T);
    VawConfig c;
    c.tuning = k % 2 ? VawTuning::constant : VawTuning::adaptive;
    c.horizon = T;
    DelayedVaw L(c, 2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const ArrivalIndex index(s);
    std::vector<Vector> zs;
    std::vector<double> ys;
    double rho_prev = 0.0;
    for (Round t = 1; t <= T; ++t) {
      const bool big = t % 10 == 0;
      Vector z = vec({u(eng), u(eng)});
      if (!big) z *= 0.02;
      else z *= 5.0;
      zs.push_back(z);
      ys.push_back(z.sum() >= 0 ? 1.0 : -1.0);
      const Vector x = L.play(z);
      const auto diag = L.diagnostics();
      CHECK(diag.clip_level >= rho_prev);
      rho_prev = diag.clip_level;
      if (diag.clip_factor < 1.0) {
        ++clipped;
        CHECK(std::abs(std::abs(z.dot(x)) - diag.clip_level) <= 1e-10);
      } else {
        CHECK(std::abs(z.dot(x)) <= diag.clip_level + 1e-12 * (1.0 + diag.clip_level));
      }
      FeedbackBatch b;
      b.round = t;
      for (const auto tau : index.at(t)) b.labels.push_back({tau, ys[tau - 1], zs[tau - 1], t});
      L.absorb(b);
    }
  }
  CHECK(clipped > 0);
}

// ----------------------------------------------------------------- OMD ---

TEST_CASE("delayed OMD examples") {
  const BallDomain dom{2, 2.0};
  {
    DelayedOmd L(1.0, dom);
    L.play(vec({0, 0}));
    L.absorb(gradients(1, {{1, vec({1, 0})}}, vec({0, 0})));
    CHECK((L.play(vec({0, 0})) - vec({-1, 0})).norm() < 1e-15);
  }
  {
    DelayedOmd L(1.0, dom);
    L.play(vec({0, 0}));
    L.absorb(gradients(1, {{1, vec({1, 0})}}, vec({0, 0})));
    const Vector x2 = L.play(vec({0, 0}));
    L.absorb(gradients(2, {}, x2));
    CHECK(L.play(vec({0, 0})) == x2);
  }
  {
    DelayedOmd L(1.0, dom);
    L.play(vec({0, 0}));
    L.absorb(gradients(1, {{1, vec({10, 0})}}, vec({0, 0})));
    CHECK((L.play(vec({0, 0})) - vec({-2, 0})).norm() < 1e-15);
  }
  CHECK_THROWS_AS(DelayedOmd(0.0, dom), ConfigError);
  auto st = make_omd_state(1.0, dom);
  CHECK_THROWS_AS(omd_sc_step(st, {}), SequencingError);
}

// ------------------------------------------------------ shared properties ---

namespace {

struct Factory {
  std::string name;
  std::function<std::unique_ptr<OnlineLearner>()> make;
  double ridge;
};

std::vector<Factory> factories(Round T) {
  const BallDomain dom{3, 2.0};
  std::vector<Factory> out;
  out.push_back({"dftrl", [=] { return std::make_unique<DelayedFtrl>(1.0, dom); }, 1.0});
  out.push_back({"domd", [=] { return std::make_unique<DelayedOmd>(1.0, dom); }, 1.0});
  for (const auto tuning : {OnsTuning::constant, OnsTuning::sqrt_missing, OnsTuning::adaptive}) {
    out.push_back({"dons-" + to_string(tuning),
                   [=] { return std::make_unique<DelayedOns>(ons_config(tuning, T), dom); }, 0.0});
  }
  for (const bool known_z : {false, true}) {
    out.push_back({known_z ? "dvaw-known-z" : "dvaw",
                   [=] {
                     VawConfig c;
                     c.horizon = T;
                     if (known_z) c.z_bound = std::sqrt(3.0);
                     return std::make_unique<DelayedVaw>(c, 3);
                   },
                   0.0});
  }
  return out;
}

}  // namespace

TEST_CASE("absorbing a batch in any order gives the same trajectory") {
  const Round T = 120;
  for (const auto& f : factories(T)) {
    CAPTURE(f.name);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto s = realize_schedule({DelayRegime::uniform(0, 8), seed}, T);
      auto a = f.make();
      auto b = f.make();
      const auto da = drive(*a, s, seed, 3, f.ridge, {}, false);
      const auto db = drive(*b, s, seed, 3, f.ridge, {}, true);
      double worst = 0.0;
      for (std::size_t i = 0; i < da.x.size(); ++i) worst = std::max(worst, (da.x[i] - db.x[i]).cwiseAbs().maxCoeff());
      CHECK(worst <= 1e-12);
    }
  }
}

TEST_CASE("learning rates are non-decreasing on random schedules") {
  const Round T = 300;
  std::mt19937_64 eng(11);
  for (const auto& f : factories(T)) {
    if (f.name.rfind("dons", 0) != 0 && f.name.rfind("dvaw", 0) != 0) continue;
    CAPTURE(f.name);
    for (int k = 0; k < 8; ++k) {
      const auto regime = k % 2 ? DelayRegime::heavy_tail(0.1, DelayRegime::uniform(0, 5))
                                : DelayRegime::uniform(0, 1 + k);
      auto L = f.make();
      double prev = 0.0;
      bool monotone = true;
      drive(*L, realize_schedule({regime, eng()}, T), eng(), 3, 0.0, [&](Round, const OnlineLearner& l) {
        const double eta = l.diagnostics().learning_rate;
        if (eta < prev) monotone = false;
        prev = eta;
      });
      CHECK(monotone);
    }
  }
}

TEST_CASE("played points stay in the domain") {
  const Round T = 200;
  for (const auto& f : factories(T)) {
    if (f.name.rfind("dvaw", 0) == 0) continue;  // unconstrained
    CAPTURE(f.name);
    auto L = f.make();
    const auto d = drive(*L, realize_schedule({DelayRegime::heavy_tail(0.1, DelayRegime::uniform(0, 5)), 3}, T),
                         9, 3, f.ridge);
    for (const auto& x : d.x) CHECK(x.norm() <= 2.0 * (1.0 + 1e-9) + 1e-12);
  }
}

TEST_CASE("feature and gradient dimensions are checked") {
  DelayedFtrl L(1.0, {2, 1.0});
  L.play(vec({0, 0}));
  CHECK_THROWS(L.absorb(gradients(1, {{1, vec({1, 0, 0})}}, vec({0, 0}))));
  VawConfig c;
  c.tuning = VawTuning::constant;
  DelayedVaw V(c, 2);
  CHECK_THROWS(V.play(vec({1, 2, 3})));
}
