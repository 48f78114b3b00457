#include "doctest.h"

#include "fixtures.hpp"
#include "ila/error.hpp"

#include <memory>

using namespace ila;
using namespace fixtures;

namespace {

NoiseBounds bounds() {
  NoiseBounds b;
  b.gps = gps_bounds();
  b.vision = from_bounds(std::vector<AxisBound>{{-1, 1, 4}}, 3.0);
  b.motion = motion_bounds();
  return b;
}

// Single facade landmark seen from the origin camera.
struct VisionScene {
  std::shared_ptr<IntensityField> field = std::make_shared<IntensityField>();
  CameraIntrinsics k;
  EpochInputs in;

  explicit VisionScene(bool flat = false) {
    if (!flat) {
      field->ramp = Vector3d(0.3, -0.2, 0.0);
      field->waves.push_back({Vector3d(1.5, 0.9, 0.0), 12.0, 0.4});
      field->waves.push_back({Vector3d(-0.6, 1.7, 0.0), 8.0, 1.3});
    }
    field->surfaces.push_back({Vector3d(0, 0, -1), -15.0});
    VisionLandmark lm;
    lm.id = "V1";
    lm.position = Vector3d(1.2, -0.8, 15.0);
    lm.position_set = PZonotope::point(lm.position);
    in.keyframe.state = NavState{};
    const Vector3d pc = lm.position;
    in.keyframe.key_pixels.push_back(project(k, pc));
    in.keyframe.inverse_depths.push_back(1.0 / pc.z());
    in.keyframe.intensities.push_back(field->albedo(lm.position));
    lm.source_pixel = in.keyframe.key_pixels[0];
    NavState truth;
    truth.position = Vector3d(0.2, 0.0, 2.0);
    in.a_priori = truth;
    in.motion_mean = truth;
    in.intrinsics = k;
    in.image.emplace(field, truth, k);
    in.vision.push_back({lm, field->albedo(lm.position)});
  }
};

}  // namespace

TEST_CASE("motion expected-state set") {
  EpochInputs in;
  const auto b = bounds();
  auto s = expected_state_motion(in, b);
  CHECK(s.center.isZero());
  CHECK(s.generators == b.motion.generators);
  CHECK(s.covariance == b.motion.covariance);
  in.motion_mean.position = Vector3d(1, 2, 3);
  s = expected_state_motion(in, b);
  CHECK(s.center.head<3>().isApprox(Vector3d(1, 2, 3)));
  CHECK(s.generators == b.motion.generators);
}

TEST_CASE("gps expected-state set uses the row pseudoinverse") {
  const auto sat = satellite("G1", 0.0, 90.0);  // due +x
  NavState truth;
  auto in = gps_epoch(truth, truth, {sat}, {4.0});
  NoiseBounds b = bounds();
  b.gps = PZonotope(VectorXd::Zero(1), MatrixXd::Constant(1, 1, 5), MatrixXd::Constant(1, 1, 5));

  const RowVector7d h = gps_jacobian(truth, sat);
  CHECK(h.isApprox((RowVector7d() << -1, 0, 0, 0, 0, 0, 1).finished()));
  const VectorXd hp = h.transpose() / 2.0;
  const auto s = expected_state_gps(in, b, 0);
  CHECK((s.center - 4.0 * hp).norm() < 1e-9);
  CHECK((s.generators - 5.0 * hp).norm() < 1e-12);
  CHECK((s.covariance - 5.0 * hp * hp.transpose()).norm() < 1e-12);

  for (double y : {-3.0, 0.0, 7.5}) CHECK(h.dot(row_pinv(h) * y) == doctest::Approx(y));
  CHECK_THROWS_AS(row_pinv(Eigen::RowVectorXd::Zero(7)), Error);
}

TEST_CASE("gps innovation") {
  const auto sats = sky(6);
  NavState truth;
  truth.clock_bias = 3.0;
  NavState apriori = truth;
  apriori.position += Vector3d(0.2, -0.1, 0.3);

  // Measurement consistent with the motion offset gives zero innovation.
  auto in = gps_epoch(apriori, apriori, sats, {});
  in.motion_mean = apriori;
  in.motion_mean.position += Vector3d(0.4, 0.1, -0.2);
  in.gps[0].pseudorange += gps_jacobian(apriori, sats[0]).dot(in.motion_mean - apriori);
  CHECK(innovation_gps(in, bounds(), 0).value == doctest::Approx(0.0).epsilon(1e-9));

  // 60 m bias leaves the 99.9% cut and saturates the status.
  auto faulty = gps_epoch(truth, apriori, sats, {60.0});
  const auto inn = innovation_gps(faulty, bounds(), 0);
  const auto cut = confidence_cut(inn.expected, 0.999);
  CHECK(std::abs(inn.value - cut.center(0)) > cut.radius()(0));
  CHECK(inn.status() > 0.99);
}

TEST_CASE("fault status grows with injected bias") {
  const auto sats = sky(6);
  NavState truth;
  NavState apriori = truth;
  apriori.position += Vector3d(0.1, 0.1, -0.2);
  double prev = -1.0;
  for (double bias : {0.0, 10.0, 30.0, 60.0}) {
    const auto in = gps_epoch(truth, apriori, sats, {bias + 1.0});
    const double s = innovation_gps(in, bounds(), 0).status();
    CHECK(s >= prev);
    prev = s;
  }
  CHECK(prev > 0.99);
}

TEST_CASE("fault-free gps innovations rarely exceed status 0.5") {
  const auto sats = sky(8);
  const auto b = bounds();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1, 1), unit(0, 1);
  std::normal_distribution<double> n01;
  int high = 0, total = 0;
  for (int epoch = 0; epoch < 125; ++epoch) {
    NavState truth;
    truth.position = Vector3d(u(rng), u(rng), u(rng)) * 50.0;
    NavState apriori = truth;
    apriori.position += 0.5 * Vector3d(u(rng), u(rng), u(rng));
    apriori.clock_bias += 0.5 * u(rng);
    std::vector<double> err;
    for (std::size_t i = 0; i < sats.size(); ++i) err.push_back(5.0 * u(rng) + std::sqrt(5.0 * unit(rng)) * n01(rng));
    const auto in = gps_epoch(truth, apriori, sats, err);
    for (std::size_t i = 0; i < sats.size(); ++i, ++total) high += innovation_gps(in, b, i).status() > 0.5 ? 1 : 0;
  }
  CHECK(total == 1000);
  CHECK(high <= 10);
}

TEST_CASE("vision expected-state and innovation sets") {
  VisionScene sc;
  auto b = bounds();
  const auto lin = linearize_vision(sc.in, 0);
  CHECK(std::abs(lin.dz) < 1e-9);
  CHECK(lin.bx.norm() > 0.0);

  const auto s = expected_state_vision(sc.in, b, 0);
  // Point landmark set: rank-one spread along B_x.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s.covariance);
  CHECK(es.eigenvalues().head(6).cwiseAbs().maxCoeff() < 1e-12 * es.eigenvalues()(6));
  CHECK((s.generators.col(0).normalized().cwiseAbs() - lin.bx.transpose().normalized().cwiseAbs()).norm() < 1e-9);

  // Inflating the landmark covariance inflates the mapped covariance.
  auto wide = sc;
  wide.in.vision[0].landmark.position_set = PZonotope::gaussian(sc.in.vision[0].landmark.position, 0.01 * Matrix3d::Identity());
  const auto sw = expected_state_vision(wide.in, b, 0);
  CHECK(is_psd(sw.covariance - s.covariance));
  CHECK(sw.covariance.trace() > s.covariance.trace());

  CHECK(innovation_vision(sc.in, b, 0).value == doctest::Approx(0.0).epsilon(1e-9));
  auto biased = sc;
  biased.in.vision[0].intensity += 200.0;
  CHECK(innovation_vision(biased.in, b, 0).status() > 0.99);

  VisionScene flat(true);
  try {
    expected_state_vision(flat.in, b, 0);
    FAIL("expected a degenerate-geometry error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerate);
  }
  ReachPipeline pipe(b);
  const auto r = pipe.process(flat.in);
  CHECK_FALSE(r.vision[0].informative);
}

TEST_CASE("joint fault status") {
  CHECK(joint_fault_status(std::vector<double>(8, 0.0), 8) == 0.0);
  CHECK(joint_fault_status(std::vector<double>(8, 1.0), 8) == doctest::Approx(0.99));
  CHECK(joint_fault_status(std::vector<double>(8, 0.2), 8) == doctest::Approx(0.2));
  CHECK(joint_fault_status(std::vector<double>{0.6}, 8) == doctest::Approx(0.6));
  CHECK(joint_fault_status(std::vector<double>{1.0, 1.0, 0.0, 0.0}, 2) == 0.0);
  CHECK_THROWS_AS(joint_fault_status(std::vector<double>{}, 8), Error);
}

TEST_CASE("pipeline keeps a K-window per landmark") {
  const auto sats = sky(6);
  NavState truth;
  ReachPipeline pipe(bounds(), 3);
  std::vector<double> joint;
  for (int k = 0; k < 6; ++k) {
    const auto in = gps_epoch(truth, truth, sats, {k < 3 ? 80.0 : 0.0});
    joint.push_back(pipe.process(in).gps[0].joint_status);
  }
  CHECK(joint[0] == doctest::Approx(0.99));
  CHECK(joint[3] == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(joint[5] == doctest::Approx(0.0));
}

TEST_CASE("scaled union") {
  const auto motion = motion_bounds();
  const PZonotope m1(VectorXd::Constant(7, 0.5), MatrixXd::Identity(7, 7), MatrixXd::Identity(7, 7));
  const std::vector<Member> one{{m1, 0.0}};
  const std::vector<Member> none;
  const std::vector<double> q0{0.0}, q1{1.0};

  const auto alone = scaled_union(motion, one, none, q0, {});
  const auto ref = enclose_union(std::vector<PZonotope>{motion});
  CHECK(alone.center.isApprox(ref.center));
  CHECK(alone.covariance.isApprox(ref.covariance));

  const auto both = scaled_union(motion, one, none, q1, {});
  const auto ref2 = enclose_union(std::vector<PZonotope>{motion, m1});
  CHECK(both.center.isApprox(ref2.center));
  CHECK(both.generators.isApprox(ref2.generators));

  const std::vector<Member> half{{m1, 0.5}};
  const auto dbl = scaled_union(motion, half, none, q1, {});
  const auto ref3 = enclose_union(std::vector<PZonotope>{motion, scale(2.0, m1)});
  CHECK(dbl.center.isApprox(ref3.center));
  CHECK(dbl.covariance.isApprox(ref3.covariance));

  CHECK(pzono_cost(PZonotope::point(VectorXd::Zero(7)), 0.999, WeightVector::uniform(7)) == 0.0);
}

TEST_CASE("cost is monotone in each weight and the fast path matches") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0, 1);
  const WeightVector w = WeightVector::position_only(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_problem(rng, 4, 3);
    const UnionCost fast(p.motion, p.gps, p.vision, 0.999, w);
    std::vector<double> qg(4), qv(3);
    for (auto& q : qg) q = unit(rng) < 0.5 ? 0.0 : unit(rng);
    for (auto& q : qv) q = unit(rng) < 0.5 ? 0.0 : unit(rng);
    std::vector<double> flat(qg);
    flat.insert(flat.end(), qv.begin(), qv.end());
    const double slow = pzono_cost(scaled_union(p.motion, p.gps, p.vision, qg, qv), 0.999, w);
    CHECK(fast(flat) == doctest::Approx(slow).epsilon(1e-10));

    const std::size_t i = static_cast<std::size_t>(trial) % 7;
    auto off = flat, on = flat;
    off[i] = 0.0;
    on[i] = 1.0;
    CHECK(fast(on) >= fast(off) - 1e-12);
  }
}

TEST_CASE("forward-difference gradient matches direct re-evaluation") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_problem(rng, 5, 6);
    const UnionCost cost(p.motion, p.gps, p.vision, 0.999, WeightVector::uniform(7));
    std::vector<double> q(11), g(11);
    for (auto& x : q) x = unit(rng) < 0.2 ? 0.0 : unit(rng);
    const double base = cost.forward_gradient(q, 1e-3, g);
    CHECK(base == doctest::Approx(cost(q)).epsilon(1e-12));
    for (std::size_t i = 0; i < q.size(); ++i) {
      auto qp = q;
      qp[i] += 1e-3;
      CHECK(g[i] == doctest::Approx((cost(qp) - cost(q)) / 1e-3).epsilon(1e-6));
    }
  }
}
