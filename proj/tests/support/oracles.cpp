#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

std::vector<std::int64_t> observed(const Delays& d, std::int64_t t) {
  std::vector<std::int64_t> out;
  for (std::int64_t tau = 1; tau < t && tau <= static_cast<std::int64_t>(d.size()); ++tau) {
    if (tau + d[tau - 1] < t) out.push_back(tau);
  }
  return out;
}

std::vector<std::int64_t> missing(const Delays& d, std::int64_t t) {
  std::vector<std::int64_t> out;
  for (std::int64_t tau = 1; tau < t && tau <= static_cast<std::int64_t>(d.size()); ++tau) {
    if (tau + d[tau - 1] >= t) out.push_back(tau);
  }
  return out;
}

std::vector<std::int64_t> arrivals(const Delays& d, std::int64_t t) {
  std::vector<std::int64_t> out;
  for (std::int64_t tau = 1; tau <= t && tau <= static_cast<std::int64_t>(d.size()); ++tau) {
    if (tau + d[tau - 1] == t) out.push_back(tau);
  }
  return out;
}

std::int64_t sigma_max(const Delays& d) {
  std::int64_t best = 0;
  for (std::int64_t t = 1; t <= static_cast<std::int64_t>(d.size()); ++t) {
    best = std::max<std::int64_t>(best, static_cast<std::int64_t>(missing(d, t).size()));
  }
  return best;
}

std::int64_t d_max(const Delays& d) {
  std::int64_t best = 0;
  for (const auto v : d) best = std::max(best, v);
  return best;
}

std::int64_t d_tot(const Delays& d) {
  std::int64_t s = 0;
  for (const auto v : d) s += v;
  return s;
}

std::int64_t perceived_dmax(const Delays& d, std::int64_t t) {
  std::int64_t best = 0;
  for (std::int64_t tau = 1; tau <= t && tau <= static_cast<std::int64_t>(d.size()); ++tau) {
    best = std::max(best, std::min(d[tau - 1], t - tau));
  }
  return best;
}

Delays truncated(const Delays& d) {
  Delays out = d;
  const auto T = static_cast<std::int64_t>(d.size());
  for (std::int64_t t = 1; t <= T; ++t) out[t - 1] = std::min(out[t - 1], T - t);
  return out;
}

std::int64_t min_over_subsets(const Delays& d) {
  const auto T = static_cast<std::int64_t>(d.size());
  if (T > 20) throw std::invalid_argument("min_over_subsets: T too large");
  std::vector<std::uint32_t> masks;  // m_t as bitmasks
  for (std::int64_t t = 1; t <= T; ++t) {
    std::uint32_t m = 0;
    for (const auto tau : missing(d, t)) m |= 1u << (tau - 1);
    masks.push_back(m);
  }
  std::int64_t best = T + 1;
  for (std::uint32_t s = 0; s < (1u << T); ++s) {
    std::int64_t worst = 0;
    for (const auto m : masks) {
      worst = std::max<std::int64_t>(worst, __builtin_popcount(m & ~s));
    }
    best = std::min<std::int64_t>(best, __builtin_popcount(s) + worst);
  }
  return best;
}

Vec project(const Vec& x, double radius) {
  if (radius < 0.0) return x;
  const double n = x.norm();
  if (n <= radius) return x;
  return x * (radius / n);
}

Vec minimize(const Objective& f, const Gradient& grad, Vec x0, double radius, int max_iter) {
  Vec x = project(x0, radius);
  Vec y = x;
  double fx = f(x);
  double step = 1.0;
  double momentum = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vec gy = grad(y);
    const double fy = f(y);
    Vec next;
    // Backtracking on the quadratic upper model.
    for (int k = 0; k < 60; ++k) {
      next = project(y - step * gy, radius);
      const Vec diff = next - y;
      if (f(next) <= fy + gy.dot(diff) + diff.squaredNorm() / (2.0 * step) + 1e-15 * std::abs(fy)) {
        break;
      }
      step *= 0.5;
    }
    const double fnext = f(next);
    if (fnext > fx) {
      // Restart momentum when the objective goes up.
      y = x;
      momentum = 1.0;
      continue;
    }
    const Vec moved = next - x;
    const double improvement = fx - fnext;
    if (moved.norm() < 1e-14 && improvement <= 1e-16 * (1.0 + std::abs(fx))) {
      // A stalled step from an extrapolated point says nothing about x.
      if ((y - x).norm() < 1e-14) break;
      y = x;
      momentum = 1.0;
      continue;
    }
    const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = next + ((momentum - 1.0) / m_next) * moved;
    momentum = m_next;
    x = next;
    fx = fnext;
    step *= 1.1;
  }
  return x;
}

}  // namespace oracle
