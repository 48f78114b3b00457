#include "ila/estimator.hpp"

#include "ila/error.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace ila {

double measurement_variance(const PZonotope& bound) {
  require(bound.dim() == 1, "measurement variance: bound must be 1-D");
  return std::max(bound.covariance(0, 0), 1e-9);
}

namespace {

struct Row {
  RowVector7d jac;
  double residual;
  double weight;
};

bool selected(const std::vector<double>& q, std::size_t i) { return i < q.size() && q[i] >= 0.5; }

// Residual rows at x; nullopt when a selected vision landmark falls behind
// the camera. Weights come from `frozen` when given, so the cost seen by the
// line search has the same weights as the normal equations.
std::optional<std::vector<Row>> rows_at(const EpochInputs& in, const AttentionSet& sel, const NoiseBounds& bounds,
                                        const NavState& x, const std::vector<Row>* frozen = nullptr) {
  std::vector<Row> rows;
  for (std::size_t i = 0; i < in.gps.size(); ++i) {
    if (!selected(sel.gps, i)) continue;
    const auto& m = in.gps[i];
    rows.push_back({gps_jacobian(x, m.sat), m.pseudorange - gps_predict(x, m.sat),
                    1.0 / measurement_variance(bounds.gps_for(m.sat.id))});
  }
  for (std::size_t j = 0; j < in.vision.size(); ++j) {
    if (!selected(sel.vision, j)) continue;
    const auto& m = in.vision[j];
    try {
      const auto jac = vision_jacobians(x, m.landmark, in.keyframe, in.intrinsics, *in.image);
      const double pred = vision_predict(x, m.landmark, in.keyframe, in.intrinsics, *in.image);
      const Matrix3d& pcov = m.landmark.position_set.covariance;
      const double var = measurement_variance(bounds.vision_for(m.landmark.id)) + jac.landmark * pcov * jac.landmark.transpose();
      rows.push_back({jac.state, m.intensity - pred, 1.0 / var});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kBehindCamera) throw;
      return std::nullopt;
    }
  }
  if (frozen)
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r].weight = (*frozen)[r].weight;
  return rows;
}

double cost_of(const std::vector<Row>& rows, const Vector7d& dprior, const Matrix7d& info) {
  double c = dprior.dot(info * dprior);
  for (const auto& r : rows) c += r.weight * r.residual * r.residual;
  return c;
}

}  // namespace

EstimatorState estimate_state(const EpochInputs& in, const AttentionSet& selection, const EstimatorState& prior,
                              const NoiseBounds& bounds, const EstimatorOptions& opt) {
  require(selection.gps.size() == in.gps.size() && selection.vision.size() == in.vision.size(),
          "estimate: selection does not match the epoch's landmarks");
  require(in.vision.empty() || in.image.has_value(), "estimate: vision landmarks given without a camera image");
  Eigen::LLT<Matrix7d> prior_llt(prior.covariance);
  require(prior_llt.info() == Eigen::Success, "estimate: prior covariance is not positive definite");
  const Matrix7d info = prior_llt.solve(Matrix7d::Identity());

  NavState x = prior.state;
  auto rows = rows_at(in, selection, bounds, x);
  require(rows.has_value(), "estimate: a selected landmark is behind the prior camera", ErrorCode::kEstimationFailure);
  if (rows->empty()) return {prior.state, prior.covariance, prior.landmarks};

  double cost = cost_of(*rows, x - prior.state, info);
  int bad = 0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    Matrix7d a = info;
    Vector7d b = -info * (x - prior.state);
    for (const auto& r : *rows) {
      a += r.weight * r.jac.transpose() * r.jac;
      b += r.weight * r.jac.transpose() * r.residual;
    }
    const Vector7d step = a.ldlt().solve(b);
    if (!step.allFinite()) throw Error(ErrorCode::kEstimationFailure, "estimate: singular normal equations");

    if (step.norm() < opt.step_tol) break;
    // Gauss-Newton decrement at rounding level: take the step if it helps, then stop.
    const bool tiny = b.dot(step) < 1e-9 * std::max(1.0, cost);

    // Backtracking. Pseudoranges near 2e7 m leave the cost ~1e-9 relative
    // noise, so a change below that counts as flat and ends the fit.
    const double prev = cost;
    const double flat = 1e-9 * std::max(1.0, prev);
    bool accepted = false;
    double t = 1.0;
    for (int half = 0; half < 10; ++half, t *= 0.5) {
      const NavState trial = NavState::from_vector(x.to_vector() + t * step);
      auto trial_rows = rows_at(in, selection, bounds, trial, &*rows);
      if (!trial_rows) continue;
      const double c = cost_of(*trial_rows, trial - prior.state, info);
      if (c <= prev + flat) {
        if (c < prev) {
          x = trial;
          rows = std::move(trial_rows);
          cost = c;
        }
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (tiny) break;
      if (++bad >= opt.max_bad_steps)
        throw Error(ErrorCode::kEstimationFailure, "estimate: cost did not decrease for " + std::to_string(bad) +
                                                       " consecutive iterations");
      continue;
    }
    bad = 0;
    if (tiny || prev - cost <= flat || (t * step).norm() < opt.step_tol) break;
  }

  Matrix7d h = info;
  for (const auto& r : *rows) h += r.weight * r.jac.transpose() * r.jac;
  EstimatorState out;
  out.state = x;
  out.covariance = h.ldlt().solve(Matrix7d::Identity());
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  out.landmarks = prior.landmarks;
  return out;
}

std::map<std::string, LandmarkEstimate> update_landmarks(const EpochInputs& in, const AttentionSet& selection,
                                                         const NavState& state,
                                                         const std::map<std::string, LandmarkEstimate>& previous,
                                                         const NoiseBounds& bounds, const EstimatorOptions& opt) {
  require(selection.vision.size() == in.vision.size(), "update landmarks: selection size mismatch");
  std::map<std::string, LandmarkEstimate> out = previous;
  std::map<std::string, bool> observed;
  for (std::size_t j = 0; j < in.vision.size(); ++j) {
    if (!selected(selection.vision, j)) continue;
    const auto& m = in.vision[j];
    auto it = out.find(m.landmark.id);
    if (it == out.end()) continue;
    observed[m.landmark.id] = true;
    VisionLandmark lm = m.landmark;
    lm.position = it->second.position;
    try {
      const auto jac = vision_jacobians(state, lm, in.keyframe, in.intrinsics, *in.image);
      if (jac.landmark.squaredNorm() == 0.0) continue;
      const double r = m.intensity - vision_predict(state, lm, in.keyframe, in.intrinsics, *in.image);
      const double w = 1.0 / measurement_variance(bounds.vision_for(lm.id));
      const Matrix3d prior_info = it->second.covariance.inverse();
      Matrix3d post = (prior_info + w * jac.landmark.transpose() * jac.landmark).inverse();
      post = 0.5 * (post + post.transpose());
      it->second.position += post * jac.landmark.transpose() * (w * r);
      it->second.covariance = post;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kBehindCamera) throw;
    }
  }
  for (auto& [id, est] : out)
    if (!observed.contains(id)) est.covariance *= opt.inflation;
  return out;
}

NavState feedback_motion(bool available, const NavState& estimate, const NavState& motion_mean) {
  return available ? estimate : motion_mean;
}

}  // namespace ila
