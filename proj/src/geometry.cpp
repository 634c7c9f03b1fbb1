#include "doco/geometry.hpp"

#include <cmath>
#include <sstream>

namespace doco {

namespace {

constexpr double kSymmetryTol = 1e-12;

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix dense_inverse(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericError("psd matrix: Cholesky factorization failed (not positive definite)");
  }
  return llt.solve(Matrix::Identity(m.rows(), m.cols()));
}

void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

}  // namespace

PsdMatrix::PsdMatrix(Matrix entries, bool cache_inverse) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) throw NumericError("psd matrix: not square");
  if (!all_finite(entries_)) throw NumericError("psd matrix: non-finite entries");
  const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
  if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw NumericError("psd matrix: not symmetric");
  }
  if (cache_inverse) refresh_inverse();
}

PsdMatrix PsdMatrix::scaled_identity(Eigen::Index n, double scale, bool cache_inverse) {
  if (!(scale > 0.0)) throw NumericError("psd matrix: identity scale must be positive");
  PsdMatrix m(scale * Matrix::Identity(n, n), false);
  if (cache_inverse) m.inverse_ = (1.0 / scale) * Matrix::Identity(n, n);
  return m;
}

const Matrix& PsdMatrix::inverse() const {
  if (!inverse_) throw NumericError("psd matrix: no cached inverse");
  return *inverse_;
}

void PsdMatrix::refresh_inverse() {
  Matrix inv = dense_inverse(entries_);
  symmetrize(inv);
  inverse_ = std::move(inv);
  updates_since_refresh_ = 0;
}

void PsdMatrix::rank_one_update(const Vector& v, double c) {
  if (!(c > 0.0)) throw NumericError("rank-one update: coefficient must be positive");
  if (v.size() != dim()) throw NumericError("rank-one update: dimension mismatch");
  entries_.noalias() += c * v * v.transpose();
  symmetrize(entries_);
  if (inverse_) {
    const Vector w = *inverse_ * v;
    inverse_->noalias() -= (c / (1.0 + c * v.dot(w))) * w * w.transpose();
    symmetrize(*inverse_);
    if (++updates_since_refresh_ >= kRefreshInterval) refresh_inverse();
  }
}

Vector project_ball(const Vector& x, const BallDomain& dom) {
  if (!dom.bounded()) return x;
  const double norm = x.norm();
  if (norm <= dom.radius) return x;
  if (dom.radius <= 0.0) return Vector::Zero(x.size());
  return x * (dom.radius / norm);
}

Vector project_ball_mahalanobis(const Vector& x_star, const PsdMatrix& a, const BallDomain& dom,
                                const MahalanobisOptions& opts) {
  double mu = 0.0;
  return project_ball_mahalanobis(x_star, a, dom, opts, mu);
}

Vector project_ball_mahalanobis(const Vector& x_star, const PsdMatrix& a, const BallDomain& dom,
                                const MahalanobisOptions& opts, double& multiplier) {
  if (!(opts.tol > 0.0)) throw NumericError("mahalanobis projection: tol must be positive");
  if (x_star.size() != a.dim()) throw NumericError("mahalanobis projection: dimension mismatch");
  multiplier = 0.0;
  if (!dom.bounded() || x_star.norm() <= dom.radius) return x_star;
  if (dom.radius <= 0.0) {
    multiplier = std::numeric_limits<double>::infinity();
    return Vector::Zero(x_star.size());
  }

  const Matrix& am = a.entries();
  const Vector rhs = am * x_star;
  const Matrix identity = Matrix::Identity(a.dim(), a.dim());
  auto point_at = [&](double mu) -> Vector {
    Eigen::LLT<Matrix> llt(am + mu * identity);
    if (llt.info() != Eigen::Success) {
      throw NumericError("mahalanobis projection: A + mu I not positive definite");
    }
    return llt.solve(rhs);
  };

  const double r = dom.radius;
  double lo = 0.0;
  double hi = 1.0;
  Vector x_hi = point_at(hi);
  int doublings = 0;
  while (x_hi.norm() > r) {
    if (++doublings > opts.max_doublings) {
      std::ostringstream os;
      os << "mahalanobis projection: failed to bracket mu, last bracket [" << lo << ", " << hi << "]";
      throw NumericError(os.str());
    }
    lo = hi;
    hi *= 2.0;
    x_hi = point_at(hi);
  }
  if (x_hi.norm() >= r - opts.tol) {
    multiplier = hi;
    return x_hi;
  }

  for (int i = 0; i < opts.max_bisections; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket exhausted in floating point
    Vector x_mid = point_at(mid);
    const double norm = x_mid.norm();
    if (norm > r) {
      lo = mid;
    } else {
      hi = mid;
      x_hi = std::move(x_mid);
      if (norm >= r - opts.tol) {
        multiplier = hi;
        return x_hi;
      }
    }
  }
  // x(hi) is feasible; accept it when the bracket can no longer shrink.
  if (std::nextafter(lo, hi) >= hi) {
    multiplier = hi;
    return x_hi;
  }
  std::ostringstream os;
  os.precision(17);
  os << "mahalanobis projection: bisection did not converge, last bracket [" << lo << ", " << hi
     << "]";
  throw NumericError(os.str());
}

PsdMatrix sm_rank_one_update(const PsdMatrix& a, const Vector& v, double c) {
  if (!a.has_inverse()) throw NumericError("sherman-morrison: matrix has no cached inverse");
  PsdMatrix out = a;
  out.rank_one_update(v, c);
  return out;
}

Vector solve_psd(const PsdMatrix& a, const Vector& b) {
  if (!b.allFinite()) throw NumericError("solve_psd: non-finite right-hand side");
  if (b.size() != a.dim()) throw NumericError("solve_psd: dimension mismatch");
  if (a.has_inverse()) return a.inverse() * b;
  Eigen::LLT<Matrix> llt(a.entries());
  if (llt.info() != Eigen::Success) {
    throw NumericError("solve_psd: Cholesky factorization failed (not positive definite)");
  }
  Vector x = llt.solve(b);
  if (!x.allFinite()) throw NumericError("solve_psd: non-finite solution");
  return x;
}

}  // namespace doco
