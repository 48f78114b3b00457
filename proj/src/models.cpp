#include "ila/models.hpp"

#include "ila/error.hpp"

#include <cmath>
#include <numbers>

namespace ila {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w <= 0.0) w += two_pi;
  return w - std::numbers::pi;
}

Vector7d NavState::to_vector() const {
  Vector7d v;
  v << position, orientation, clock_bias;
  return v;
}

NavState NavState::from_vector(const Vector7d& v) {
  NavState s;
  s.position = v.head<3>();
  s.orientation = v.segment<3>(3).unaryExpr([](double a) { return wrap_angle(a); });
  s.clock_bias = v(6);
  return s;
}

Vector7d operator-(const NavState& a, const NavState& b) {
  Vector7d d = a.to_vector() - b.to_vector();
  for (int i = 3; i < 6; ++i) d(i) = wrap_angle(d(i));
  return d;
}

namespace {

Matrix3d rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Matrix3d r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}
Matrix3d rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Matrix3d r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}
Matrix3d rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Matrix3d r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}
Matrix3d d_rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Matrix3d r;
  r << 0, 0, 0, 0, -s, -c, 0, c, -s;
  return r;
}
Matrix3d d_rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Matrix3d r;
  r << -s, 0, c, 0, 0, 0, -c, 0, -s;
  return r;
}
Matrix3d d_rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Matrix3d r;
  r << -s, -c, 0, c, -s, 0, 0, 0, 0;
  return r;
}

// d pi / d p at p (2 x 3).
Eigen::Matrix<double, 2, 3> projection_jacobian(const CameraIntrinsics& k, const Vector3d& p) {
  const double iz = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> j;
  j << k.fx * iz, 0.0, -k.fx * p.x() * iz * iz, 0.0, k.fy * iz, -k.fy * p.y() * iz * iz;
  return j;
}

}  // namespace

Matrix3d rotation(const Vector3d& rpy) { return rot_z(rpy(2)) * rot_y(rpy(1)) * rot_x(rpy(0)); }

Matrix3d rotation_derivative(const Vector3d& rpy, int k) {
  switch (k) {
    case 0: return rot_z(rpy(2)) * rot_y(rpy(1)) * d_rot_x(rpy(0));
    case 1: return rot_z(rpy(2)) * d_rot_y(rpy(1)) * rot_x(rpy(0));
    case 2: return d_rot_z(rpy(2)) * rot_y(rpy(1)) * rot_x(rpy(0));
    default: throw Error(ErrorCode::kInvalidInput, "rotation_derivative: angle index out of range");
  }
}

double gps_predict(const NavState& state, const GpsSatellite& sat) {
  const double range = (sat.position - state.position).norm();
  require(range > 0.0, "gps_predict: receiver co-located with satellite " + sat.id);
  return range + (state.clock_bias - sat.clock_correction);
}

RowVector7d gps_jacobian(const NavState& state, const GpsSatellite& sat) {
  const Vector3d los = sat.position - state.position;
  const double range = los.norm();
  require(range > 0.0, "gps_jacobian: receiver co-located with satellite " + sat.id);
  RowVector7d h = RowVector7d::Zero();
  h.head<3>() = -los.transpose() / range;
  h(6) = 1.0;
  return h;
}

void CameraIntrinsics::validate() const {
  require(fx > 0.0 && fy > 0.0, "camera intrinsics: focal lengths must be positive");
  require(std::isfinite(cx) && std::isfinite(cy), "camera intrinsics: non-finite principal point");
}

Vector2d project(const CameraIntrinsics& k, const Vector3d& p_cam) {
  if (!(p_cam.z() > kDepthFloor))
    throw Error(ErrorCode::kBehindCamera, "project: point at depth " + std::to_string(p_cam.z()) +
                                              " is behind the camera");
  return {k.fx * p_cam.x() / p_cam.z() + k.cx, k.fy * p_cam.y() / p_cam.z() + k.cy};
}

Vector3d unproject(const CameraIntrinsics& k, const Vector2d& u, double inv_depth) {
  require(inv_depth > 0.0, "unproject: inverse depth must be positive");
  const double z = 1.0 / inv_depth;
  return {(u.x() - k.cx) / k.fx * z, (u.y() - k.cy) / k.fy * z, z};
}

void Keyframe::validate() const {
  require(key_pixels.size() == inverse_depths.size() && key_pixels.size() == intensities.size(),
          "keyframe: per-pixel lists differ in length");
  for (double d : inverse_depths) require(d > 0.0, "keyframe: inverse depths must be positive");
}

std::size_t Keyframe::find(const Vector2d& u) const {
  for (std::size_t i = 0; i < key_pixels.size(); ++i)
    if ((key_pixels[i] - u).cwiseAbs().maxCoeff() <= 1e-9) return i;
  throw Error(ErrorCode::kInvalidInput, "keyframe: pixel is not a key pixel");
}

Vector3d warp_point(const NavState& state, const NavState& kf_state, const Vector3d& p_kf) {
  const Matrix3d rk = rotation(state.orientation);
  const Matrix3d rkf = rotation(kf_state.orientation);
  const Matrix3d r_rel = rk.transpose() * rkf;
  const Vector3d t_rel = rk.transpose() * (kf_state.position - state.position);
  return r_rel * p_kf + t_rel;
}

Vector3d warp(const NavState& state, const Keyframe& kf, const Vector2d& u, const CameraIntrinsics& k) {
  const std::size_t i = kf.find(u);
  return warp_point(state, kf.state, unproject(k, u, kf.inverse_depths[i]));
}

double IntensityField::albedo(const Vector3d& x) const {
  double v = base + ramp.dot(x);
  for (const auto& w : waves) v += w.amplitude * std::sin(w.wavevector.dot(x) + w.phase);
  return v;
}

Vector3d IntensityField::albedo_gradient(const Vector3d& x) const {
  Vector3d g = ramp;
  for (const auto& w : waves) g += w.amplitude * std::cos(w.wavevector.dot(x) + w.phase) * w.wavevector;
  return g;
}

CameraImage::CameraImage(std::shared_ptr<const IntensityField> field, NavState pose, CameraIntrinsics k)
    : field_(std::move(field)), pose_(pose), k_(k), r_(rotation(pose.orientation)) {
  require(field_ != nullptr, "camera image: missing intensity field");
  k_.validate();
}

CameraImage::Hit CameraImage::cast(const Vector2d& pixel, int surface) const {
  require(surface >= 0 && static_cast<std::size_t>(surface) < field_->surfaces.size(),
          "camera image: unknown surface index " + std::to_string(surface));
  const Plane& pl = field_->surfaces[static_cast<std::size_t>(surface)];
  const Vector3d dc((pixel.x() - k_.cx) / k_.fx, (pixel.y() - k_.cy) / k_.fy, 1.0);
  const Vector3d dw = r_ * dc;
  const double denom = pl.normal.dot(dw);
  const double t = (pl.offset - pl.normal.dot(pose_.position)) / denom;
  if (!(std::abs(denom) > 1e-12) || !(t > kDepthFloor))
    throw Error(ErrorCode::kBehindCamera, "camera image: pixel ray does not hit its surface in front of the camera");
  return {pose_.position + t * dw, dw, t};
}

double CameraImage::intensity(const Vector2d& pixel, int surface) const {
  return field_->albedo(cast(pixel, surface).point);
}

Eigen::RowVector2d CameraImage::gradient(const Vector2d& pixel, int surface) const {
  const Hit hit = cast(pixel, surface);
  const Vector3d& n = field_->surfaces[static_cast<std::size_t>(surface)].normal;
  const double denom = n.dot(hit.dir);
  // d X / d dir for X = o + t(dir) dir on the plane.
  const Matrix3d dx_ddir = hit.t * (Matrix3d::Identity() - hit.dir * n.transpose() / denom);
  Eigen::Matrix<double, 3, 2> ddir_dpix;
  ddir_dpix.col(0) = r_.col(0) / k_.fx;
  ddir_dpix.col(1) = r_.col(1) / k_.fy;
  return field_->albedo_gradient(hit.point).transpose() * dx_ddir * ddir_dpix;
}

double vision_predict(const NavState& state, const VisionLandmark& lm, const Keyframe& kf,
                      const CameraIntrinsics& k, const CameraImage& image) {
  // Landmark -> keyframe pixel and inverse depth -> warp into the current camera.
  const Vector3d p_kf = rotation(kf.state.orientation).transpose() * (lm.position - kf.state.position);
  const Vector2d u = project(k, p_kf);
  const Vector3d p_cur = warp_point(state, kf.state, unproject(k, u, 1.0 / p_kf.z()));
  return image.intensity(project(k, p_cur), lm.surface);
}

VisionJacobians vision_jacobians(const NavState& state, const VisionLandmark& lm, const Keyframe& kf,
                                 const CameraIntrinsics& k, const CameraImage& image) {
  (void)kf;  // the keyframe round trip is the identity on the landmark
  const Matrix3d r = rotation(state.orientation);
  const Vector3d rel = lm.position - state.position;
  const Vector3d q = r.transpose() * rel;
  const Vector2d pixel = project(k, q);
  const Eigen::RowVector3d g = image.gradient(pixel, lm.surface) * projection_jacobian(k, q);

  VisionJacobians j;
  j.landmark = g * r.transpose();
  j.state.setZero();
  j.state.head<3>() = -j.landmark;
  for (int a = 0; a < 3; ++a) j.state(3 + a) = g.dot(rotation_derivative(state.orientation, a).transpose() * rel);
  return j;
}

NavState motion_predict(const MotionModel& model, const NavState& prev, const Vector7d& control) {
  return NavState::from_vector(model.transition * prev.to_vector() + control);
}

}  // namespace ila
