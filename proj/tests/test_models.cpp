#include "doctest.h"

#include "ila/error.hpp"
#include "ila/models.hpp"

#include <cmath>
#include <memory>
#include <random>

using namespace ila;

namespace {

std::shared_ptr<IntensityField> wavy_field() {
  auto f = std::make_shared<IntensityField>();
  f->base = 120.0;
  f->ramp = Vector3d(0.5, -0.3, 0.2);
  f->waves.push_back({Vector3d(2.0, 0.7, 0.0), 15.0, 0.3});
  f->waves.push_back({Vector3d(-0.4, 1.9, 0.8), 9.0, 1.1});
  f->waves.push_back({Vector3d(0.3, 0.2, 1.5), 6.0, -0.7});
  f->surfaces.push_back({Vector3d(0, 0, -1), -20.0});  // facade at z = 20
  return f;
}

// Landmark on the facade seen from `kf` at pixel u.
VisionLandmark landmark_at(const NavState& kf, const IntensityField& f, const CameraIntrinsics& k, const Vector2d& u) {
  const Vector3d dir = rotation(kf.orientation) * Vector3d((u.x() - k.cx) / k.fx, (u.y() - k.cy) / k.fy, 1.0);
  const auto& pl = f.surfaces[0];
  const double t = (pl.offset - pl.normal.dot(kf.position)) / pl.normal.dot(dir);
  VisionLandmark lm;
  lm.id = "v";
  lm.position = kf.position + t * dir;
  lm.source_pixel = u;
  return lm;
}

Keyframe keyframe_for(const NavState& s, const VisionLandmark& lm, const CameraIntrinsics& k, const IntensityField& f) {
  Keyframe kf;
  kf.state = s;
  const Vector3d pc = rotation(s.orientation).transpose() * (lm.position - s.position);
  kf.key_pixels.push_back(project(k, pc));
  kf.inverse_depths.push_back(1.0 / pc.z());
  kf.intensities.push_back(f.albedo(lm.position));
  return kf;
}

}  // namespace

TEST_CASE("angle wrapping and state differences") {
  CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(3 * M_PI / 2) == doctest::Approx(-M_PI / 2));
  NavState a, b;
  a.orientation.z() = 3.1;
  b.orientation.z() = -3.1;
  CHECK((a - b)(5) == doctest::Approx(6.2 - 2 * M_PI));
}

TEST_CASE("gps prediction and jacobian") {
  GpsSatellite sat{"g1", Vector3d(2.02e7, 0, 0), 0.0, 0.0, 0.0};
  NavState s;
  s.clock_bias = 10.0;
  CHECK(gps_predict(s, sat) == doctest::Approx(20200010.0));

  RowVector7d expect;
  expect << -1, 0, 0, 0, 0, 0, 1;
  CHECK(gps_jacobian(s, sat).isApprox(expect));

  GpsSatellite up{"g2", Vector3d(0, 0, 2.02e7), 0.0, 90.0, 0.0};
  expect << 0, 0, -1, 0, 0, 0, 1;
  CHECK(gps_jacobian(s, up).isApprox(expect));

  NavState moved = s;
  moved.position = Vector3d(100, 0, 0);
  CHECK(gps_predict(s, sat) - gps_predict(moved, sat) == doctest::Approx(100.0));

  sat.clock_correction = 10.0;
  CHECK(gps_predict(s, sat) == doctest::Approx(2.02e7));
  s.clock_bias += 3.0;
  sat.clock_correction += 3.0;
  CHECK(gps_predict(s, sat) == doctest::Approx(2.02e7));

  GpsSatellite same{"g3", Vector3d::Zero(), 0, 0, 0};
  CHECK_THROWS_AS(gps_predict(NavState{}, same), Error);
}

// Pseudorange in extended precision: a 1e-6 m step on a 2e7 m range is below
// double resolution, so the difference quotient needs the wider mantissa.
long double pseudorange_ld(const Vector7d& x, const GpsSatellite& sat) {
  long double r2 = 0.0L;
  for (int i = 0; i < 3; ++i) {
    const long double d = static_cast<long double>(sat.position(i)) - static_cast<long double>(x(i));
    r2 += d * d;
  }
  return std::sqrt(r2) + static_cast<long double>(x(6)) - static_cast<long double>(sat.clock_correction);
}

TEST_CASE("gps jacobian matches central differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    GpsSatellite sat{"g", Vector3d(u(rng), u(rng), u(rng)).normalized() * 2.02e7, 5.0, 0, 0};
    NavState s;
    s.position = Vector3d(u(rng), u(rng), u(rng)) * 100.0;
    s.clock_bias = u(rng) * 30.0;
    CHECK(std::abs(static_cast<double>(pseudorange_ld(s.to_vector(), sat)) - gps_predict(s, sat)) < 1e-6);
    const auto h = gps_jacobian(s, sat);
    for (int i = 0; i < 7; ++i) {
      const long double step = i >= 3 && i < 6 ? 1e-7L : 1e-6L;
      Vector7d xp = s.to_vector(), xm = s.to_vector();
      xp(i) += static_cast<double>(step);
      xm(i) -= static_cast<double>(step);
      const long double dx = static_cast<long double>(xp(i)) - static_cast<long double>(xm(i));
      const double fd = static_cast<double>((pseudorange_ld(xp, sat) - pseudorange_ld(xm, sat)) / dx);
      CHECK(std::abs(fd - h(i)) <= 1e-5 * std::max(1.0, std::abs(h(i))));
    }
  }
}

TEST_CASE("projection round trips") {
  CameraIntrinsics k{100, 100, 50, 50};
  CHECK(project(k, Vector3d(1, 1, 2)).isApprox(Vector2d(100, 100)));
  CHECK(project(k, Vector3d(0, 0, 7)).isApprox(Vector2d(50, 50)));
  CHECK(unproject(k, Vector2d(50, 50), 0.5).isApprox(Vector3d(0, 0, 2)));
  CHECK(unproject(k, Vector2d(100, 100), 0.5).isApprox(Vector3d(1, 1, 2)));
  CHECK_THROWS_AS(project(k, Vector3d(0, 0, 0.005)), Error);
  CHECK_THROWS_AS(unproject(k, Vector2d(1, 1), 0.0), Error);
  try {
    project(k, Vector3d(0, 0, -1));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBehindCamera);
  }

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> px(0, 640), d(0.01, 2.0);
  CameraIntrinsics def;
  for (int i = 0; i < 100; ++i) {
    const Vector2d uv(px(rng), px(rng));
    CHECK((project(def, unproject(def, uv, d(rng))) - uv).norm() < 1e-9);
  }
}

TEST_CASE("warp") {
  CameraIntrinsics k;
  Keyframe kf;
  kf.state.position = Vector3d(1, 2, 3);
  kf.state.orientation = Vector3d(0.1, -0.2, 0.3);
  kf.key_pixels = {Vector2d(300, 200)};
  kf.inverse_depths = {0.25};
  kf.intensities = {100};
  CHECK((warp(kf.state, kf, Vector2d(300, 200), k) - unproject(k, Vector2d(300, 200), 0.25)).norm() < 1e-12);
  CHECK_THROWS_AS(warp(kf.state, kf, Vector2d(1, 1), k), Error);

  Keyframe plain;
  plain.key_pixels = {Vector2d(k.cx, k.cy)};
  plain.inverse_depths = {0.2};
  plain.intensities = {0};
  NavState forward;
  forward.position = Vector3d(0, 0, 1);
  CHECK(warp(forward, plain, Vector2d(k.cx, k.cy), k).isApprox(Vector3d(0, 0, 4)));

  // Independent transform: world point then into the current camera.
  NavState cur;
  cur.position = Vector3d(1.3, 1.8, 3.4);
  cur.orientation = Vector3d(0.12, -0.15, 0.31);
  const Vector3d pw = rotation(kf.state.orientation) * unproject(k, Vector2d(300, 200), 0.25) + kf.state.position;
  const Vector3d expect = rotation(cur.orientation).transpose() * (pw - cur.position);
  CHECK((warp(cur, kf, Vector2d(300, 200), k) - expect).norm() < 1e-9);
}

TEST_CASE("rotation derivatives match central differences") {
  const Vector3d rpy(0.3, -0.5, 1.2);
  for (int a = 0; a < 3; ++a) {
    Vector3d p = rpy, m = rpy;
    p(a) += 1e-7;
    m(a) -= 1e-7;
    const Matrix3d fd = (rotation(p) - rotation(m)) / 2e-7;
    CHECK((fd - rotation_derivative(rpy, a)).norm() < 1e-6);
  }
  CHECK((rotation(rpy) * rotation(rpy).transpose() - Matrix3d::Identity()).norm() < 1e-12);
}

TEST_CASE("vision prediction") {
  const auto field = wavy_field();
  CameraIntrinsics k;
  NavState kf_state;
  const auto lm = landmark_at(kf_state, *field, k, Vector2d(350, 260));
  const auto kf = keyframe_for(kf_state, lm, k, *field);

  // Image taken from the keyframe pose: zero photometric residual.
  CameraImage same(field, kf_state, k);
  CHECK(vision_predict(kf_state, lm, kf, k, same) == doctest::Approx(kf.intensities[0]).epsilon(1e-12));

  // Image from the true current pose, evaluated at the true state: the
  // landmark's own albedo.
  NavState cur;
  cur.position = Vector3d(0.4, -0.1, 2.0);
  cur.orientation = Vector3d(0.01, 0.05, -0.02);
  CameraImage img(field, cur, k);
  CHECK(vision_predict(cur, lm, kf, k, img) == doctest::Approx(field->albedo(lm.position)).epsilon(1e-10));

  // Small state offset: direct field evaluation at the analytically warped pixel.
  NavState off = cur;
  off.position += Vector3d(0.05, 0.02, -0.03);
  const Vector2d pix = project(k, rotation(off.orientation).transpose() * (lm.position - off.position));
  const Vector3d dir = rotation(cur.orientation) * Vector3d((pix.x() - k.cx) / k.fx, (pix.y() - k.cy) / k.fy, 1.0);
  const double t = (20.0 - cur.position.z()) / dir.z();
  CHECK(std::abs(vision_predict(off, lm, kf, k, img) - field->albedo(cur.position + t * dir)) < 1e-9);

  auto flat = std::make_shared<IntensityField>();
  flat->surfaces = field->surfaces;
  CameraImage flat_img(flat, cur, k);
  CHECK(vision_predict(cur, lm, kf, k, flat_img) == doctest::Approx(128.0));
  CHECK(vision_predict(off, lm, kf, k, flat_img) == doctest::Approx(128.0));
  const auto jz = vision_jacobians(off, lm, kf, k, flat_img);
  CHECK(jz.state.isZero());
  CHECK(jz.landmark.isZero());
}

TEST_CASE("vision jacobians match central differences") {
  const auto field = wavy_field();
  CameraIntrinsics k;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1, 1), px(150, 490);
  for (int trial = 0; trial < 100; ++trial) {
    NavState kf_state;
    const auto lm = landmark_at(kf_state, *field, k, Vector2d(px(rng), px(rng) * 0.75));
    const auto kf = keyframe_for(kf_state, lm, k, *field);
    NavState truth;
    truth.position = Vector3d(u(rng), 0.3 * u(rng), 3.0 + u(rng));
    truth.orientation = Vector3d(0.05 * u(rng), 0.2 * u(rng), 0.05 * u(rng));
    CameraImage img(field, truth, k);
    NavState s = truth;
    s.position += 0.05 * Vector3d(u(rng), u(rng), u(rng));
    s.orientation += 0.005 * Vector3d(u(rng), u(rng), u(rng));

    const auto j = vision_jacobians(s, lm, kf, k, img);
    for (int i = 0; i < 7; ++i) {
      const double step = i >= 3 && i < 6 ? 1e-7 : 1e-6;
      Vector7d xp = s.to_vector(), xm = s.to_vector();
      xp(i) += step;
      xm(i) -= step;
      const double fd = (vision_predict(NavState::from_vector(xp), lm, kf, k, img) -
                         vision_predict(NavState::from_vector(xm), lm, kf, k, img)) /
                        (2 * step);
      CHECK(std::abs(fd - j.state(i)) <= 1e-5 * std::max(1.0, std::abs(j.state(i))));
    }
    for (int i = 0; i < 3; ++i) {
      VisionLandmark lp = lm, lmm = lm;
      lp.position(i) += 1e-6;
      lmm.position(i) -= 1e-6;
      const double fd = (vision_predict(s, lp, kf, k, img) - vision_predict(s, lmm, kf, k, img)) / 2e-6;
      CHECK(std::abs(fd - j.landmark(i)) <= 1e-5 * std::max(1.0, std::abs(j.landmark(i))));
    }
  }
}

TEST_CASE("motion prediction") {
  MotionModel m;
  NavState s;
  s.position = Vector3d(1, 2, 3);
  s.orientation = Vector3d(0.1, 0.2, 0.3);
  s.clock_bias = 4;
  CHECK((motion_predict(m, s) - s).norm() < 1e-15);

  Vector7d ctl = Vector7d::Zero();
  ctl(2) = 1.5;
  CHECK(motion_predict(m, s, ctl).position.z() == doctest::Approx(4.5));

  m.transition(0, 6) = 0.5;
  const NavState two = motion_predict(m, motion_predict(m, s));
  const NavState once = NavState::from_vector(m.transition * m.transition * s.to_vector());
  CHECK((two - once).norm() < 1e-12);
}
