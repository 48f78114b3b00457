#include "doctest.h"

#include "fixtures.hpp"
#include "ila/error.hpp"
#include "ila/estimator.hpp"
#include "ila/sim.hpp"

#include <cmath>
#include <memory>

using namespace ila;
using namespace fixtures;

namespace {

// Scenario whose draws are all zero: odometry, noise, landmark and
// initial-state errors.
Scenario quiet_scenario(std::uint64_t seed = 3) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  cfg.fault_windows.clear();
  Scenario sc = generate_scenario(cfg);
  for (std::size_t k = 1; k < sc.truth.size(); ++k) sc.controls[k] = sc.truth[k] - sc.truth[k - 1];
  for (auto& row : sc.gps_noise) std::fill(row.begin(), row.end(), 0.0);
  for (auto& row : sc.vision_noise) std::fill(row.begin(), row.end(), 0.0);
  for (const auto& l : sc.landmarks) sc.initial_landmarks[l.id].position = l.position;
  sc.initial_estimate = sc.truth.front();
  return sc;
}

AttentionSet all_of(const EpochInputs& in) {
  AttentionSet a;
  a.gps.assign(in.gps.size(), 1.0);
  a.vision.assign(in.vision.size(), 1.0);
  return a;
}

Vector7d offset() {
  Vector7d d;
  d << 0.3, -0.2, 0.25, 0.002, -0.001, 0.0015, 0.4;
  return d;
}

// Same weighted cost the estimator minimizes, weights taken at `at`.
double weighted_cost(const EpochInputs& in, const NoiseBounds& b, const EstimatorState& prior, const NavState& at,
                     const NavState& x) {
  const Matrix7d info = prior.covariance.inverse();
  const Vector7d d = x - prior.state;
  double c = d.dot(info * d);
  for (const auto& m : in.gps) {
    const double r = m.pseudorange - gps_predict(x, m.sat);
    c += r * r / measurement_variance(b.gps_for(m.sat.id));
  }
  for (const auto& m : in.vision) {
    const auto j = vision_jacobians(at, m.landmark, in.keyframe, in.intrinsics, *in.image);
    const double var = measurement_variance(b.vision_for(m.landmark.id)) +
                       j.landmark * m.landmark.position_set.covariance * j.landmark.transpose();
    const double r = m.intensity - vision_predict(x, m.landmark, in.keyframe, in.intrinsics, *in.image);
    c += r * r / var;
  }
  return c;
}

}  // namespace

TEST_CASE("zero-noise measurements recover the true state") {
  const Scenario sc = quiet_scenario();
  const NoiseBounds b = sc.config.noise_bounds();
  for (int k : {1, 17, 42}) {
    const auto kk = static_cast<std::size_t>(k);
    const EpochInputs in = sample_measurements(sc, k, sc.truth[kk - 1], sc.initial_landmarks);
    EstimatorState prior;
    prior.state = NavState::from_vector(sc.truth[kk].to_vector() + offset());
    prior.covariance = 1e8 * Matrix7d::Identity();
    const auto est = estimate_state(in, all_of(in), prior, b);
    const Vector7d e = est.state - sc.truth[kk];
    CHECK(e.head<3>().norm() < 1e-6);
    CHECK(e.segment<3>(3).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(std::abs(e(6)) < 1e-6);
  }
}

TEST_CASE("GPS-only fit recovers position and clock, keeps the prior attitude") {
  NavState truth;
  truth.position = Vector3d(3.0, -1.0, 12.0);
  truth.clock_bias = 25.0;
  NavState prior_state = NavState::from_vector(truth.to_vector() + offset());
  const auto in = gps_epoch(truth, prior_state, sky(6), {});
  NoiseBounds b;
  b.gps = gps_bounds();
  EstimatorState prior;
  prior.state = prior_state;
  prior.covariance = 1e8 * Matrix7d::Identity();
  AttentionSet sel;
  sel.gps.assign(6, 1.0);
  const auto est = estimate_state(in, sel, prior, b);
  CHECK((est.state.position - truth.position).norm() < 1e-6);
  CHECK(std::abs(est.state.clock_bias - truth.clock_bias) < 1e-6);
  CHECK((est.state.orientation - prior_state.orientation).norm() == 0.0);
  // Attitude is unobserved: its covariance stays at the prior.
  CHECK(est.covariance(3, 3) == doctest::Approx(1e8));
  CHECK(est.covariance(0, 0) < 100.0);
}

TEST_CASE("prior-only epoch returns the prior") {
  EpochInputs in;
  EstimatorState prior;
  prior.state.position = Vector3d(1, 2, 3);
  prior.covariance = 0.5 * Matrix7d::Identity();
  const auto est = estimate_state(in, AttentionSet{}, prior, NoiseBounds{});
  CHECK(est.state.to_vector() == prior.state.to_vector());
  CHECK(est.covariance == prior.covariance);

  // Unselected measurements are ignored.
  const auto gin = gps_epoch(NavState{}, prior.state, sky(5), {});
  AttentionSet none;
  none.gps.assign(5, 0.0);
  NoiseBounds b;
  b.gps = gps_bounds();
  CHECK(estimate_state(gin, none, prior, b).state.to_vector() == prior.state.to_vector());
}

TEST_CASE("estimate rejects inconsistent inputs") {
  EstimatorState prior;
  NoiseBounds b;
  b.gps = gps_bounds();
  const auto in = gps_epoch(NavState{}, NavState{}, sky(5), {});
  AttentionSet sel;
  sel.gps.assign(4, 1.0);
  CHECK_THROWS_AS(estimate_state(in, sel, prior, b), Error);
  sel.gps.assign(5, 1.0);
  prior.covariance = -Matrix7d::Identity();
  CHECK_THROWS_AS(estimate_state(in, sel, prior, b), Error);
}

TEST_CASE("selected landmark behind the prior camera is an estimation failure") {
  const Scenario sc = quiet_scenario();
  const NoiseBounds b = sc.config.noise_bounds();
  const EpochInputs in = sample_measurements(sc, 5, sc.truth[4], sc.initial_landmarks);
  EstimatorState prior;
  prior.state = sc.truth[5];
  prior.state.orientation(1) += M_PI;  // facing backwards
  try {
    estimate_state(in, all_of(in), prior, b);
    FAIL("expected an estimation failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEstimationFailure);
  }
}

TEST_CASE("weighted cost is non-increasing over iterations") {
  ScenarioConfig cfg;
  cfg.seed = 11;
  const Scenario sc = generate_scenario(cfg);
  const NoiseBounds b = cfg.noise_bounds();
  const EpochInputs in = sample_measurements(sc, 6, sc.truth[5], sc.initial_landmarks);
  EstimatorState prior;
  prior.state = NavState::from_vector(in.motion_mean.to_vector() + 0.5 * offset());
  prior.covariance = Matrix7d::Identity();
  double last = weighted_cost(in, b, prior, prior.state, prior.state);
  for (int n = 1; n <= 6; ++n) {
    EstimatorOptions opt;
    opt.max_iterations = n;
    const auto est = estimate_state(in, all_of(in), prior, b, opt);
    const double c = weighted_cost(in, b, prior, prior.state, est.state);
    CHECK(c <= last * (1.0 + 1e-9));
    last = c;
  }
}

TEST_CASE("landmark refinement: fixed point, inflation, zero gradient") {
  const Scenario sc = quiet_scenario();
  const NoiseBounds b = sc.config.noise_bounds();
  const EpochInputs in = sample_measurements(sc, 8, sc.truth[7], sc.initial_landmarks);
  const auto sel = all_of(in);

  SUBCASE("exact measurements at the exact state leave landmarks in place") {
    const auto next = update_landmarks(in, sel, sc.truth[8], sc.initial_landmarks, b);
    for (const auto& l : sc.landmarks) {
      CHECK((next.at(l.id).position - l.position).norm() < 1e-8);
      CHECK(next.at(l.id).covariance.trace() <= sc.initial_landmarks.at(l.id).covariance.trace());
    }
  }

  SUBCASE("never-observed landmark inflates by 1.01 per epoch") {
    AttentionSet none = sel;
    std::fill(none.vision.begin(), none.vision.end(), 0.0);
    auto est = sc.initial_landmarks;
    for (int i = 0; i < 10; ++i) est = update_landmarks(in, none, sc.truth[8], est, b);
    const auto& id = sc.landmarks.front().id;
    const Matrix3d expect = std::pow(1.01, 10) * sc.initial_landmarks.at(id).covariance;
    CHECK((est.at(id).covariance - expect).norm() < 1e-15);
    CHECK(est.at(id).position == sc.initial_landmarks.at(id).position);
  }

  SUBCASE("landmark off the current epoch's list is inflated too") {
    auto prev = sc.initial_landmarks;
    prev["extra"] = LandmarkEstimate{Vector3d(0, 0, 50), Matrix3d::Identity()};
    const auto next = update_landmarks(in, sel, sc.truth[8], prev, b);
    CHECK(next.at("extra").covariance(0, 0) == doctest::Approx(1.01));
  }

  SUBCASE("noisy landmark moves toward the truth and tightens") {
    auto prev = sc.initial_landmarks;
    const auto& l = sc.landmarks[3];
    prev[l.id].position = l.position + Vector3d(0.0, 0.03, 0.0);
    prev[l.id].covariance = 0.01 * Matrix3d::Identity();
    EpochInputs in2 = in;
    for (auto& m : in2.vision)
      if (m.landmark.id == l.id) {
        m.landmark.position = prev[l.id].position;
        m.landmark.position_set = prev[l.id].as_set();
      }
    const auto next = update_landmarks(in2, sel, sc.truth[8], prev, b);
    CHECK((next.at(l.id).position - l.position).norm() < 0.03);
    CHECK(next.at(l.id).covariance.trace() < 0.03);
  }
}

TEST_CASE("zero field gradient skips the landmark update") {
  auto field = std::make_shared<IntensityField>();
  field->surfaces.push_back({Vector3d::UnitZ(), 20.0});
  CameraIntrinsics k;
  EpochInputs in;
  VisionLandmark lm;
  lm.id = "F1";
  lm.position = Vector3d(1.0, -0.5, 20.0);
  lm.position_set = PZonotope::gaussian(lm.position, 0.04 * Matrix3d::Identity());
  in.keyframe.key_pixels.push_back(project(k, lm.position));
  in.keyframe.inverse_depths.push_back(1.0 / 20.0);
  in.keyframe.intensities.push_back(field->albedo(lm.position));
  lm.source_pixel = in.keyframe.key_pixels[0];
  in.intrinsics = k;
  in.image.emplace(field, NavState{}, k);
  in.vision.push_back({lm, 140.0});  // far from the flat 128
  std::map<std::string, LandmarkEstimate> prev{{"F1", LandmarkEstimate{lm.position, 0.04 * Matrix3d::Identity()}}};
  AttentionSet sel;
  sel.vision = {1.0};
  NoiseBounds b;
  const auto next = update_landmarks(in, sel, NavState{}, prev, b);
  CHECK(next.at("F1").position == prev.at("F1").position);
  CHECK(next.at("F1").covariance == prev.at("F1").covariance);
}

TEST_CASE("feedback rule") {
  NavState est, mm;
  est.position = Vector3d(1, 0, 0);
  mm.position = Vector3d(0, 2, 0);
  CHECK(feedback_motion(true, est, mm).position == est.position);
  CHECK(feedback_motion(false, est, mm).position == mm.position);
  CHECK(feedback_motion(true, est, est).position == feedback_motion(false, est, est).position);
}

TEST_CASE("measurement variance floors at 1e-9") {
  CHECK(measurement_variance(gps_bounds(5.0, 5.0, 3.0)) == doctest::Approx(15.0));
  CHECK(measurement_variance(PZonotope::point(VectorXd::Zero(1))) == 1e-9);
  CHECK_THROWS_AS(measurement_variance(PZonotope::point(VectorXd::Zero(2))), Error);
}
