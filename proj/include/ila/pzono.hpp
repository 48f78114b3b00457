#pragma once

// Zonotopes and probabilistic zonotopes (p-Zonotopes).
//
// A p-Zonotope (c, G, Sigma) encloses every Gaussian density whose mean lies
// in the zonotope <c, G> and whose covariance is bounded by Sigma. All types
// here are immutable values and every operation is a pure function.

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace ila {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Z = { c + G b : b in [-1, 1]^e }. Zero generator columns encode a point.
struct Zonotope {
  VectorXd center;
  MatrixXd generators;  // n x e

  Zonotope() = default;
  Zonotope(VectorXd c, MatrixXd g);

  Eigen::Index dim() const { return center.size(); }
  Eigen::Index order() const { return generators.cols(); }
  /// Per-axis half-widths of the axis-aligned interval hull.
  VectorXd radius() const;
};

struct PZonotope {
  VectorXd center;
  MatrixXd generators;  // n x e
  MatrixXd covariance;  // n x n, symmetric PSD

  PZonotope() = default;
  PZonotope(VectorXd c, MatrixXd g, MatrixXd sigma);

  /// Point set with zero covariance.
  static PZonotope point(const VectorXd& c);
  /// Pure Gaussian overbound (no center uncertainty).
  static PZonotope gaussian(const VectorXd& c, const MatrixXd& sigma);

  Eigen::Index dim() const { return center.size(); }
  Eigen::Index order() const { return generators.cols(); }
};

/// Non-negative axis weights summing to one.
class WeightVector {
 public:
  explicit WeightVector(VectorXd w);
  static WeightVector uniform(Eigen::Index n);
  /// (1/3, 1/3, 1/3, 0, ...) over the first three axes of an n-vector.
  static WeightVector position_only(Eigen::Index n);

  const VectorXd& values() const { return w_; }
  Eigen::Index size() const { return w_.size(); }

 private:
  VectorXd w_;
};

/// Per-axis mean interval [lo, hi] and per-axis variance upper bound.
struct AxisBound {
  double lo = 0.0;
  double hi = 0.0;
  double variance = 0.0;
};

PZonotope from_bounds(std::span<const AxisBound> axes, double factor);

PZonotope minkowski_sum(const PZonotope& a, const PZonotope& b);
PZonotope linear_map(const MatrixXd& a, const PZonotope& p);
PZonotope scale(double s, const PZonotope& p);
PZonotope translate(const VectorXd& mu, const PZonotope& p);

/// Interval-hull enclosure of a union. The result's gamma-cut contains the
/// gamma-cut of every member, for every gamma.
PZonotope enclose_union(std::span<const PZonotope> members);

/// sqrt(2) * erfinv(gamma): the standard-normal multiplier whose symmetric
/// interval has probability gamma.
double cut_multiplier(double gamma);

Zonotope confidence_cut(const PZonotope& p, double gamma);

/// trace(diag(w) G G^T).
double zonotope_size(const Zonotope& z, const WeightVector& w);

/// Squared Mahalanobis distance from x to the nearest mean in <c, G>, plus the
/// log-normalizer of the (possibly regularized) covariance.
struct NearestMean {
  VectorXd beta;         // minimizing generator coefficients
  double mahalanobis2;   // (x - c - G beta)^T Sigma^-1 (x - c - G beta)
  double log_normalizer; // log((2 pi)^{-n/2} |Sigma|^{-1/2})
};
NearestMean nearest_mean(const PZonotope& p, const VectorXd& x);

/// sup over c' in <c, G> of N(x; c', Sigma).
double density_sup(const PZonotope& p, const VectorXd& x);

/// 1 - density_sup(p, x) / density_sup(p, c), in [0, 1].
double fault_status_point(const PZonotope& p, const VectorXd& x);

/// Symmetric PSD square root (negative eigenvalues clamped to zero).
MatrixXd symmetric_sqrt(const MatrixXd& sigma);

bool is_psd(const MatrixXd& sigma, double rel_tol = 1e-10);

}  // namespace ila
