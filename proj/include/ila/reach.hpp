#pragma once

// Stochastic reachability of the expected state error per landmark, fault
// statuses from measurement innovations, and the scaled union cost.

#include "ila/models.hpp"
#include "ila/pzono.hpp"

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ila {

inline constexpr double kAlphaCap = 0.99;
inline constexpr double kWeightFloor = 1e-3;

struct NoiseBounds {
  PZonotope gps = PZonotope::point(VectorXd::Zero(1));      // 1-D, per satellite
  PZonotope vision = PZonotope::point(VectorXd::Zero(1));   // 1-D, per landmark
  PZonotope motion = PZonotope::point(VectorXd::Zero(7));   // 7-D
  std::map<std::string, PZonotope> gps_overrides;
  std::map<std::string, PZonotope> vision_overrides;

  const PZonotope& gps_for(const std::string& id) const;
  const PZonotope& vision_for(const std::string& id) const;
  void validate() const;
};

struct GpsMeasurement {
  GpsSatellite sat;
  double pseudorange = 0.0;
};

struct VisionMeasurement {
  VisionLandmark landmark;
  double intensity = 0.0;
};

struct EpochInputs {
  NavState a_priori;
  NavState motion_mean;
  std::vector<GpsMeasurement> gps;
  std::vector<VisionMeasurement> vision;
  Keyframe keyframe;
  CameraIntrinsics intrinsics;
  std::optional<CameraImage> image;  // required when vision is non-empty

  void validate() const;
};

/// Linearization of one GPS landmark about the a-priori state.
struct GpsLinearization {
  RowVector7d h;
  double dz = 0.0;  // z - h(x_apriori)
};
GpsLinearization linearize_gps(const EpochInputs& in, std::size_t i);

/// Linearization of one vision landmark about (x_apriori, p_apriori).
struct VisionLinearization {
  RowVector7d bx;
  RowVector3d bp;
  double dz = 0.0;  // z - b(x_apriori, p_apriori)
};
VisionLinearization linearize_vision(const EpochInputs& in, std::size_t j);

/// Moore-Penrose pseudoinverse of a single row, as a column.
VectorXd row_pinv(const Eigen::RowVectorXd& row);

PZonotope expected_state_motion(const EpochInputs& in, const NoiseBounds& bounds);
PZonotope expected_state_gps(const EpochInputs& in, const NoiseBounds& bounds, std::size_t i);
PZonotope expected_state_vision(const EpochInputs& in, const NoiseBounds& bounds, std::size_t j);

struct Innovation {
  double value = 0.0;
  PZonotope expected;  // 1-D expected-innovation set
  double status() const { return fault_status_point(expected, VectorXd::Constant(1, value)); }
};
Innovation innovation_gps(const EpochInputs& in, const NoiseBounds& bounds, std::size_t i);
Innovation innovation_vision(const EpochInputs& in, const NoiseBounds& bounds, std::size_t j);

/// Mean of the last min(K, n) statuses, clamped to kAlphaCap.
double joint_fault_status(std::span<const double> history, int window);

struct Member {
  PZonotope set;
  double alpha = 0.0;  // joint fault status
};

/// Enclosure of the motion set and every member scaled by q / (1 - alpha);
/// members with q <= kWeightFloor are left out.
PZonotope scaled_union(const PZonotope& motion, std::span<const Member> gps, std::span<const Member> vision,
                       std::span<const double> q_gps, std::span<const double> q_vis);

double pzono_cost(const PZonotope& union_set, double gamma, const WeightVector& w);

/// Per-landmark outcome of one pipeline epoch.
struct LandmarkReach {
  std::string id;
  bool informative = true;  // false: no usable Jacobian, excluded by default
  PZonotope expected_state = PZonotope::point(VectorXd::Zero(7));
  double innovation = 0.0;
  double status = 0.0;        // per-epoch fault status
  double joint_status = 0.0;  // over the K-window
};

struct EpochReach {
  PZonotope motion = PZonotope::point(VectorXd::Zero(7));
  std::vector<LandmarkReach> gps;
  std::vector<LandmarkReach> vision;

  std::vector<Member> gps_members() const;
  std::vector<Member> vision_members() const;
};

/// Owns the K-window status history of every landmark seen so far.
class ReachPipeline {
 public:
  explicit ReachPipeline(NoiseBounds bounds, int window = 8);

  EpochReach process(const EpochInputs& in);

  /// Replaces a landmark's recorded per-epoch statuses (oldest first).
  void set_history(const std::string& id, bool is_gps, std::span<const double> statuses);

  const NoiseBounds& bounds() const { return bounds_; }
  int window() const { return window_; }

 private:
  double push(std::map<std::string, std::deque<double>>& hist, const std::string& id, double status);

  NoiseBounds bounds_;
  int window_;
  std::map<std::string, std::deque<double>> gps_history_;
  std::map<std::string, std::deque<double>> vision_history_;
};

/// Fast evaluation of pzono_cost(scaled_union(...)) for many weight vectors;
/// agrees with the set-level path to rounding.
class UnionCost {
 public:
  UnionCost(const PZonotope& motion, std::span<const Member> gps, std::span<const Member> vision, double gamma,
            const WeightVector& w);

  /// q holds GPS weights first, then vision weights.
  double operator()(std::span<const double> q) const;

  /// Forward differences (cost(q + h e_i) - cost(q)) / h for every i, in
  /// O(n dim). Returns cost(q).
  double forward_gradient(std::span<const double> q, double h, std::span<double> grad) const;

  std::size_t n_gps() const { return n_gps_; }
  std::size_t size() const { return static_cast<std::size_t>(centers_.cols()); }

 private:
  std::size_t n_gps_;
  VectorXd motion_lo_, motion_hi_, motion_var_;
  MatrixXd centers_, radii_, var_bounds_;  // dim x members
  std::vector<double> inv_one_minus_alpha_;
  double m2_;
  VectorXd w_;
};

}  // namespace ila
