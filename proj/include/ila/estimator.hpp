#pragma once

// Baseline GPS-vision estimator: weighted Gauss-Newton over the selected
// measurements with a motion prior, plus per-landmark position refinement.

#include "ila/attention.hpp"
#include "ila/reach.hpp"

#include <map>
#include <optional>
#include <string>

namespace ila {

struct LandmarkEstimate {
  Vector3d position = Vector3d::Zero();
  Matrix3d covariance = Matrix3d::Identity();

  /// Zero-generator p-Zonotope centered on the estimate.
  PZonotope as_set() const { return PZonotope::gaussian(position, covariance); }
};

struct EstimatorState {
  NavState state;
  Matrix7d covariance = Matrix7d::Identity();
  std::map<std::string, LandmarkEstimate> landmarks;
};

struct EstimatorOptions {
  int max_iterations = 20;
  double step_tol = 1e-8;
  int max_bad_steps = 3;
  double inflation = 1.01;  // per-epoch covariance factor for unobserved landmarks
};

/// Gauss-Newton fit of the selected measurements (rounded q >= 0.5) around
/// prior.state with prior.covariance. Landmark positions are taken from the
/// measurements. Throws kEstimationFailure when the cost fails to decrease
/// max_bad_steps iterations in a row.
EstimatorState estimate_state(const EpochInputs& in, const AttentionSet& selection, const EstimatorState& prior,
                              const NoiseBounds& bounds, const EstimatorOptions& opt = {});

/// One Gauss-Newton step per selected, observed landmark at the given state;
/// every other known landmark has its covariance inflated.
std::map<std::string, LandmarkEstimate> update_landmarks(const EpochInputs& in, const AttentionSet& selection,
                                                         const NavState& state,
                                                         const std::map<std::string, LandmarkEstimate>& previous,
                                                         const NoiseBounds& bounds, const EstimatorOptions& opt = {});

/// The next epoch's propagation base: the estimate when the epoch was
/// predicted available, the motion mean otherwise.
NavState feedback_motion(bool available, const NavState& estimate, const NavState& motion_mean);

/// Diagonal variance used to weight a 1-D measurement under a declared bound.
double measurement_variance(const PZonotope& bound);

}  // namespace ila
