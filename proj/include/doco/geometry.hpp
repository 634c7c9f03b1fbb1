#ifndef DOCO_GEOMETRY_HPP
#define DOCO_GEOMETRY_HPP

#include <cmath>
#include <limits>
#include <optional>

#include "doco/common.hpp"

namespace doco {

/// Centered Euclidean ball {x : ||x||_2 <= radius}. An infinite radius
/// stands for the unconstrained space R^n.
struct BallDomain {
  Eigen::Index dim = 1;
  double radius = 0.0;

  static BallDomain unconstrained(Eigen::Index n) {
    return {n, std::numeric_limits<double>::infinity()};
  }
  bool bounded() const { return std::isfinite(radius); }
  double diameter() const { return 2.0 * radius; }
  bool contains(const Vector& x, double slack = 1e-12) const {
    return !bounded() || x.norm() <= radius + slack;
  }
};

/// Symmetric positive (semi)definite matrix with an optional cached inverse.
class PsdMatrix {
 public:
  /// Updates between dense refreshes of the cached inverse.
  static constexpr int kRefreshInterval = 512;

  PsdMatrix() = default;
  /// Throws NumericError when the matrix is not symmetric or has non-finite
  /// entries.
  explicit PsdMatrix(Matrix entries, bool cache_inverse = false);
  static PsdMatrix scaled_identity(Eigen::Index n, double scale, bool cache_inverse = true);

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }
  bool has_inverse() const { return inverse_.has_value(); }
  const Matrix& inverse() const;
  int updates_since_refresh() const { return updates_since_refresh_; }

  /// Recomputes the cached inverse from a Cholesky factorization.
  void refresh_inverse();
  /// this <- this + c v v^T, keeping the cached inverse current.
  void rank_one_update(const Vector& v, double c);

 private:
  Matrix entries_;
  std::optional<Matrix> inverse_;
  int updates_since_refresh_ = 0;
};

/// Euclidean projection onto the ball.
Vector project_ball(const Vector& x, const BallDomain& dom);

struct MahalanobisOptions {
  double tol = 1e-10;
  int max_doublings = 200;
  int max_bisections = 200;
};

/// argmin over the ball of (x - x_star)^T A (x - x_star), via the KKT
/// multiplier mu: x(mu) = (A + mu I)^{-1} A x_star, ||x(mu)|| decreasing in mu.
/// Throws NumericError (with the last bracket) if mu cannot be bracketed or
/// located to tolerance.
Vector project_ball_mahalanobis(const Vector& x_star, const PsdMatrix& a, const BallDomain& dom,
                                const MahalanobisOptions& opts = {});

/// Same, also reporting the multiplier found.
Vector project_ball_mahalanobis(const Vector& x_star, const PsdMatrix& a, const BallDomain& dom,
                                const MahalanobisOptions& opts, double& multiplier);

/// Returns A + c v v^T with the inverse maintained by Sherman-Morrison.
/// Requires a cached inverse and c > 0.
PsdMatrix sm_rank_one_update(const PsdMatrix& a, const Vector& v, double c);

/// Solves A x = b using the cached inverse when present, otherwise a
/// Cholesky factorization.
Vector solve_psd(const PsdMatrix& a, const Vector& b);

/// sqrt(x^T M x).
inline double mahalanobis_norm(const Vector& x, const Matrix& m) { return std::sqrt(x.dot(m * x)); }

}  // namespace doco

#endif  // DOCO_GEOMETRY_HPP
