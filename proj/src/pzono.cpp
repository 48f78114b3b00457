#include "ila/pzono.hpp"

#include "ila/error.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace ila {

namespace {

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* op) {
  require(a == b, std::string(op) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                      std::to_string(b) + ")");
}

// Drops all-zero generator columns.
MatrixXd compact(const MatrixXd& g) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    if (g.col(j).cwiseAbs().maxCoeff() > 0.0) keep.push_back(j);
  MatrixXd out(g.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = g.col(keep[k]);
  return out;
}

}  // namespace

Zonotope::Zonotope(VectorXd c, MatrixXd g) : center(std::move(c)), generators(std::move(g)) {
  if (generators.size() == 0) generators.resize(center.size(), 0);
  require(generators.rows() == center.size(), "zonotope: generator rows must equal dimension");
  require(all_finite(center) && all_finite(generators), "zonotope: non-finite entry");
}

VectorXd Zonotope::radius() const {
  if (generators.cols() == 0) return VectorXd::Zero(center.size());
  return generators.cwiseAbs().rowwise().sum();
}

PZonotope::PZonotope(VectorXd c, MatrixXd g, MatrixXd sigma)
    : center(std::move(c)), generators(std::move(g)), covariance(std::move(sigma)) {
  const auto n = center.size();
  if (generators.size() == 0) generators.resize(n, 0);
  if (covariance.size() == 0) covariance = MatrixXd::Zero(n, n);
  require(generators.rows() == n, "p-zonotope: generator rows must equal dimension");
  require(covariance.rows() == n && covariance.cols() == n, "p-zonotope: covariance must be n x n");
  require(all_finite(center) && all_finite(generators) && all_finite(covariance),
          "p-zonotope: non-finite entry");
  require(is_psd(covariance), "p-zonotope: covariance is not symmetric positive semidefinite");
}

PZonotope PZonotope::point(const VectorXd& c) {
  return PZonotope(c, MatrixXd(c.size(), 0), MatrixXd::Zero(c.size(), c.size()));
}

PZonotope PZonotope::gaussian(const VectorXd& c, const MatrixXd& sigma) {
  return PZonotope(c, MatrixXd(c.size(), 0), sigma);
}

WeightVector::WeightVector(VectorXd w) : w_(std::move(w)) {
  require(w_.size() > 0, "weights: empty");
  require((w_.array() >= 0.0).all(), "weights: negative weight");
  require(std::abs(w_.sum() - 1.0) <= 1e-9, "weights: entries must sum to 1");
}

WeightVector WeightVector::uniform(Eigen::Index n) {
  return WeightVector(VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

WeightVector WeightVector::position_only(Eigen::Index n) {
  require(n >= 3, "weights: position-only weights need at least 3 axes");
  VectorXd w = VectorXd::Zero(n);
  w.head<3>().setConstant(1.0 / 3.0);
  return WeightVector(w);
}

bool is_psd(const MatrixXd& sigma, double rel_tol) {
  if (sigma.rows() != sigma.cols()) return false;
  if (sigma.size() == 0) return true;
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) return false;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -rel_tol * scale;
}

MatrixXd symmetric_sqrt(const MatrixXd& sigma) {
  if (sigma.size() == 0) return sigma;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (sigma + sigma.transpose()));
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * es.eigenvalues().cwiseAbs().maxCoeff();
  VectorXd ev = es.eigenvalues().unaryExpr([floor](double l) { return l > floor ? std::sqrt(l) : 0.0; });
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

PZonotope from_bounds(std::span<const AxisBound> axes, double factor) {
  require(factor > 0.0, "from_bounds: factor must be positive");
  const auto n = static_cast<Eigen::Index>(axes.size());
  VectorXd c(n);
  MatrixXd g = MatrixXd::Zero(n, n);
  MatrixXd sigma = MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& a = axes[static_cast<std::size_t>(i)];
    require(a.lo <= a.hi, "from_bounds: inverted interval on axis " + std::to_string(i));
    require(a.variance >= 0.0, "from_bounds: negative variance bound on axis " + std::to_string(i));
    c(i) = 0.5 * (a.lo + a.hi);
    g(i, i) = 0.5 * (a.hi - a.lo);
    sigma(i, i) = factor * a.variance;
  }
  return PZonotope(c, compact(g), sigma);
}

PZonotope minkowski_sum(const PZonotope& a, const PZonotope& b) {
  require_same_dim(a.dim(), b.dim(), "minkowski_sum");
  MatrixXd g(a.dim(), a.order() + b.order());
  g << a.generators, b.generators;
  return PZonotope(a.center + b.center, std::move(g), a.covariance + b.covariance);
}

PZonotope linear_map(const MatrixXd& a, const PZonotope& p) {
  require_same_dim(a.cols(), p.dim(), "linear_map");
  MatrixXd sigma = a * p.covariance * a.transpose();
  sigma = 0.5 * (sigma + sigma.transpose());
  return PZonotope(a * p.center, a * p.generators, std::move(sigma));
}

PZonotope scale(double s, const PZonotope& p) {
  return PZonotope(s * p.center, s * p.generators, (s * s) * p.covariance);
}

PZonotope translate(const VectorXd& mu, const PZonotope& p) {
  require_same_dim(mu.size(), p.dim(), "translate");
  return PZonotope(mu + p.center, p.generators, p.covariance);
}

PZonotope enclose_union(std::span<const PZonotope> members) {
  require(!members.empty(), "enclose_union: empty member list");
  const auto n = members.front().dim();
  VectorXd lo = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  VectorXd hi = -lo;
  VectorXd d = VectorXd::Zero(n);
  for (const auto& m : members) {
    require_same_dim(m.dim(), n, "enclose_union");
    const VectorXd r = m.order() ? VectorXd(m.generators.cwiseAbs().rowwise().sum()) : VectorXd::Zero(n);
    lo = lo.cwiseMin(m.center - r);
    hi = hi.cwiseMax(m.center + r);
    // Gershgorin keeps diag(d) - Sigma diagonally dominant; the squared row
    // 1-norm of the square root keeps the member's cut parallelotope inside.
    const VectorXd gersh = m.covariance.cwiseAbs().rowwise().sum();
    const VectorXd root_l1 = symmetric_sqrt(m.covariance).cwiseAbs().rowwise().sum();
    d = d.cwiseMax(gersh.cwiseMax(root_l1.cwiseAbs2()));
  }
  const VectorXd half = 0.5 * (hi - lo);
  return PZonotope(0.5 * (hi + lo), compact(MatrixXd(half.asDiagonal())), MatrixXd(d.asDiagonal()));
}

double cut_multiplier(double gamma) {
  require(gamma > 0.0 && gamma < 1.0, "confidence level must lie in (0, 1)");
  return std::numbers::sqrt2 * boost::math::erf_inv(gamma);
}

Zonotope confidence_cut(const PZonotope& p, double gamma) {
  const double m = cut_multiplier(gamma);
  if (p.covariance.cwiseAbs().maxCoeff() == 0.0) return Zonotope(p.center, p.generators);
  const MatrixXd s = compact(m * symmetric_sqrt(p.covariance));
  MatrixXd g(p.dim(), p.order() + s.cols());
  g << p.generators, s;
  return Zonotope(p.center, std::move(g));
}

double zonotope_size(const Zonotope& z, const WeightVector& w) {
  require_same_dim(w.size(), z.dim(), "zonotope_size");
  if (z.order() == 0) return 0.0;
  return w.values().dot(z.generators.rowwise().squaredNorm());
}

namespace {

// Bounded least squares min |A b - y| over b in [-1, 1]^e, active-set
// method of Stark and Parker. Free blocks may be rank deficient; they take
// the minimum-norm solution.
VectorXd box_least_squares(const MatrixXd& a, const VectorXd& y) {
  const auto e = a.cols();
  VectorXd b = VectorXd::Zero(e);
  std::vector<int> at(static_cast<std::size_t>(e), 0);  // -1 lower, +1 upper, 0 free
  const double tol = 1e-13 * std::max(1.0, a.norm() * std::max(1.0, y.norm()));
  Eigen::Index last_freed = -1;
  double cost = (a * b - y).squaredNorm();
  for (int outer = 0; outer < 10 * e + 50; ++outer) {
    for (int inner = 0; inner <= e; ++inner) {
      std::vector<Eigen::Index> f;
      for (Eigen::Index i = 0; i < e; ++i)
        if (at[static_cast<std::size_t>(i)] == 0) f.push_back(i);
      if (f.empty()) break;
      VectorXd rhs = y;
      for (Eigen::Index i = 0; i < e; ++i)
        if (at[static_cast<std::size_t>(i)] != 0) rhs -= b(i) * a.col(i);
      MatrixXd af(a.rows(), static_cast<Eigen::Index>(f.size()));
      for (std::size_t k = 0; k < f.size(); ++k) af.col(static_cast<Eigen::Index>(k)) = a.col(f[k]);
      const VectorXd z = af.completeOrthogonalDecomposition().solve(rhs);
      double step = 1.0;
      std::size_t blocking = f.size();
      for (std::size_t k = 0; k < f.size(); ++k) {
        const double bi = b(f[k]), zi = z(static_cast<Eigen::Index>(k));
        if (zi > 1.0 || zi < -1.0) {
          const double t = ((zi > 1.0 ? 1.0 : -1.0) - bi) / (zi - bi);
          if (t < step) {
            step = t;
            blocking = k;
          }
        }
      }
      for (std::size_t k = 0; k < f.size(); ++k) {
        double& bi = b(f[k]);
        bi = std::clamp(bi + step * (z(static_cast<Eigen::Index>(k)) - bi), -1.0, 1.0);
        if (k == blocking || (step < 1.0 && std::abs(bi) >= 1.0 - 1e-14)) {
          bi = bi > 0.0 ? 1.0 : -1.0;
          at[static_cast<std::size_t>(f[k])] = bi > 0.0 ? 1 : -1;
        }
      }
      if (blocking == f.size()) break;
    }
    const double now = (a * b - y).squaredNorm();
    if (now < cost) last_freed = -1;  // progress: the last freed index may be picked again
    cost = now;
    // KKT: a bound variable whose gradient points into the box is freed.
    const VectorXd w = a.transpose() * (y - a * b);
    Eigen::Index pick = -1;
    double best = tol;
    for (Eigen::Index i = 0; i < e; ++i) {
      const int s = at[static_cast<std::size_t>(i)];
      const double v = s < 0 ? w(i) : s > 0 ? -w(i) : 0.0;
      if (v > best && i != last_freed) {
        best = v;
        pick = i;
      }
    }
    if (pick < 0) break;
    at[static_cast<std::size_t>(pick)] = 0;
    last_freed = pick;
  }
  return b;
}

}  // namespace

NearestMean nearest_mean(const PZonotope& p, const VectorXd& x) {
  require_same_dim(x.size(), p.dim(), "density_sup");
  const auto n = p.dim();
  MatrixXd sigma = p.covariance;
  Eigen::LLT<MatrixXd> llt(sigma);
  const double tr = sigma.trace();
  bool regular = llt.info() == Eigen::Success;
  if (regular) {
    const double min_pivot = llt.matrixL().toDenseMatrix().diagonal().minCoeff();
    regular = min_pivot * min_pivot > 1e-14 * std::max(tr / static_cast<double>(n), 1e-300);
  }
  if (!regular) {
    double eps = 1e-9 * tr / static_cast<double>(n);
    if (!(eps > 0.0)) eps = 1e-9;
    sigma += eps * MatrixXd::Identity(n, n);
    llt.compute(sigma);
    require(llt.info() == Eigen::Success, "density_sup: covariance could not be regularized",
            ErrorCode::kDegenerate);
  }

  const VectorXd r0 = x - p.center;
  const VectorXd beta = p.order() > 0 ? box_least_squares(llt.matrixL().solve(p.generators), llt.matrixL().solve(r0))
                                      : VectorXd();
  VectorXd r = r0;
  if (p.order() > 0) r -= p.generators * beta;
  // A residual at rounding level means x is in the zonotope.
  const double scale = std::max({1.0, r0.norm(), p.generators.cwiseAbs().colwise().sum().maxCoeff()});
  if (r.norm() <= 1e-12 * scale) r.setZero();
  const double m2 = std::max(0.0, r.dot(llt.solve(r)));
  const MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const double log_norm = -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;
  return {beta, m2, log_norm};
}

double density_sup(const PZonotope& p, const VectorXd& x) {
  const auto nm = nearest_mean(p, x);
  return std::exp(nm.log_normalizer - 0.5 * nm.mahalanobis2);
}

double fault_status_point(const PZonotope& p, const VectorXd& x) {
  // The normalizers cancel in the ratio.
  const auto nm = nearest_mean(p, x);
  return std::clamp(-std::expm1(-0.5 * nm.mahalanobis2), 0.0, 1.0);
}

}  // namespace ila
