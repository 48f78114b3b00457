#pragma once

// Measurement and motion models: GPS pseudorange, direct photometric
// alignment through a pinhole camera, and a linear state transition.
//
// Frames: the global frame is the camera frame at initialization (x right,
// y down, z forward). Orientation is (roll, pitch, yaw) composed Z-Y-X into
// the camera-to-global rotation, so vehicle heading changes appear as pitch.

#include "ila/pzono.hpp"

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

namespace ila {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Vector7d = Eigen::Matrix<double, 7, 1>;
using Matrix7d = Eigen::Matrix<double, 7, 7>;
using RowVector7d = Eigen::Matrix<double, 1, 7>;
using RowVector3d = Eigen::Matrix<double, 1, 3>;

inline constexpr int kStateDim = 7;

double wrap_angle(double a);

struct NavState {
  Vector3d position = Vector3d::Zero();     // m
  Vector3d orientation = Vector3d::Zero();  // roll, pitch, yaw in rad
  double clock_bias = 0.0;                  // m

  Vector7d to_vector() const;
  static NavState from_vector(const Vector7d& v);
  /// Componentwise difference with wrapped angles.
  friend Vector7d operator-(const NavState& a, const NavState& b);
};

/// Camera-to-global rotation for (roll, pitch, yaw).
Matrix3d rotation(const Vector3d& rpy);
/// Partial derivative of rotation() with respect to angle k.
Matrix3d rotation_derivative(const Vector3d& rpy, int k);

struct GpsSatellite {
  std::string id;
  Vector3d position = Vector3d::Zero();
  double clock_correction = 0.0;  // m
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;
};

double gps_predict(const NavState& state, const GpsSatellite& sat);
RowVector7d gps_jacobian(const NavState& state, const GpsSatellite& sat);

struct CameraIntrinsics {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 240.0;

  void validate() const;
};

inline constexpr double kDepthFloor = 0.01;

Vector2d project(const CameraIntrinsics& k, const Vector3d& p_cam);
Vector3d unproject(const CameraIntrinsics& k, const Vector2d& u, double inv_depth);

struct Keyframe {
  NavState state;
  std::vector<Vector2d> key_pixels;
  std::vector<double> inverse_depths;
  std::vector<double> intensities;

  void validate() const;
  /// Index of a key pixel (exact match to 1e-9 px).
  std::size_t find(const Vector2d& u) const;
};

/// Rigidly moves the unprojected key pixel u from the keyframe camera into
/// the camera at `state`.
Vector3d warp(const NavState& state, const Keyframe& kf, const Vector2d& u, const CameraIntrinsics& k);
Vector3d warp_point(const NavState& state, const NavState& kf_state, const Vector3d& p_kf);

/// Planar scene surface n . X = offset, n unit length.
struct Plane {
  Vector3d normal = Vector3d::UnitZ();
  double offset = 0.0;
};

struct Wave {
  Vector3d wavevector = Vector3d::Zero();  // rad / m
  double amplitude = 0.0;
  double phase = 0.0;
};

/// Analytic albedo over the scene's planar surfaces: constant + linear ramp +
/// sum of sinusoids. Stands in for recorded image intensities.
struct IntensityField {
  double base = 128.0;
  Vector3d ramp = Vector3d::Zero();
  std::vector<Wave> waves;
  std::vector<Plane> surfaces;

  double albedo(const Vector3d& x) const;
  Vector3d albedo_gradient(const Vector3d& x) const;
};

/// The current camera image: the field rendered from a fixed camera pose.
class CameraImage {
 public:
  CameraImage(std::shared_ptr<const IntensityField> field, NavState pose, CameraIntrinsics k);

  double intensity(const Vector2d& pixel, int surface) const;
  /// d intensity / d pixel.
  Eigen::RowVector2d gradient(const Vector2d& pixel, int surface) const;

  const NavState& pose() const { return pose_; }
  const CameraIntrinsics& intrinsics() const { return k_; }
  const IntensityField& field() const { return *field_; }
  const std::shared_ptr<const IntensityField>& field_ptr() const { return field_; }

 private:
  struct Hit {
    Vector3d point;
    Vector3d dir;
    double t;
  };
  Hit cast(const Vector2d& pixel, int surface) const;

  std::shared_ptr<const IntensityField> field_;
  NavState pose_;
  CameraIntrinsics k_;
  Matrix3d r_;
};

struct VisionLandmark {
  std::string id;
  Vector3d position = Vector3d::Zero();
  PZonotope position_set = PZonotope::point(Vector3d::Zero());
  Vector2d source_pixel = Vector2d::Zero();
  int surface = 0;
};

/// Intensity the current image shows where the landmark lands under `state`.
double vision_predict(const NavState& state, const VisionLandmark& lm, const Keyframe& kf,
                      const CameraIntrinsics& k, const CameraImage& image);

struct VisionJacobians {
  RowVector7d state;
  RowVector3d landmark;
};
VisionJacobians vision_jacobians(const NavState& state, const VisionLandmark& lm, const Keyframe& kf,
                                 const CameraIntrinsics& k, const CameraImage& image);

struct MotionModel {
  Matrix7d transition = Matrix7d::Identity();
  PZonotope noise_set = PZonotope::point(Vector7d::Zero());
};

/// F x_prev + control. The control term carries odometry increments.
NavState motion_predict(const MotionModel& model, const NavState& prev,
                        const Vector7d& control = Vector7d::Zero());

}  // namespace ila
