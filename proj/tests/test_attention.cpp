#include "doctest.h"

#include "fixtures.hpp"
#include "ila/error.hpp"

using namespace ila;
using namespace fixtures;

namespace {

SelectionConfig small_cfg(int n_min = 3, int l_min = 2) {
  SelectionConfig c;
  c.n_min = n_min;
  c.l_min = l_min;
  return c;
}

// Identical rank-one members along the x axis.
SelectionProblem symmetric_problem(int n_gps, int n_vis, double alpha = 0.0) {
  SelectionProblem p;
  p.motion = PZonotope::point(VectorXd::Zero(7));
  VectorXd g = VectorXd::Zero(7);
  g(0) = 2.0;
  MatrixXd s = MatrixXd::Zero(7, 7);
  s(0, 0) = 1.0;
  const PZonotope m(VectorXd::Zero(7), g, s);
  for (int i = 0; i < n_gps; ++i) p.gps.push_back({m, alpha});
  for (int j = 0; j < n_vis; ++j) p.vision.push_back({m, alpha});
  return p;
}

}  // namespace

TEST_CASE("rounding and repair") {
  SelectionConfig c = small_cfg(1, 0);
  AttentionSet r{{0.8, 0.7, 0.9}, {}, true};
  CHECK(round_attention(r, c).gps == std::vector<double>{1, 0, 1});

  AttentionSet all{{1, 1, 1}, {1, 1}, true};
  const auto ra = round_attention(all, c);
  CHECK(ra.gps == std::vector<double>{1, 1, 1});
  CHECK(ra.vision == std::vector<double>{1, 1});
  CHECK_FALSE(ra.relaxed);

  c.n_min = 2;
  AttentionSet low{{0.5, 0.4, 0.3}, {}, true};
  CHECK(round_attention(low, c).gps == std::vector<double>{1, 1, 0});

  c.n_min = 4;
  try {
    round_attention(low, c);
    FAIL("expected infeasibility");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInfeasible);
  }

  // Disallowed vision entries never get repaired in.
  c.n_min = 1;
  c.l_min = 1;
  AttentionSet v{{1.0}, {0.9, 0.1}, true};
  CHECK(round_attention(v, c, {false, true}).vision == std::vector<double>{0, 1});
}

TEST_CASE("objective") {
  const auto p = symmetric_problem(2, 0);
  SelectionConfig c = small_cfg(1, 0);
  c.weights = WeightVector(VectorXd::Unit(7, 0));
  const double m = cut_multiplier(c.gamma);
  // Hull half-width 2, covariance bound 1 on x: (4 + m^2) / 2.
  CHECK(objective(p, AttentionSet{{1, 1}, {}, false}, c) == doctest::Approx((4.0 + m * m) / 2.0));
  CHECK(objective(p, AttentionSet{{1, 0}, {}, false}, c) == doctest::Approx(4.0 + m * m));
  CHECK_THROWS_AS(objective(p, AttentionSet{{0, 0}, {}, false}, c), Error);

  auto faulty = p;
  faulty.gps[0].alpha = 0.5;
  CHECK(objective(faulty, AttentionSet{{1, 0}, {}, false}, c) > objective(p, AttentionSet{{1, 0}, {}, false}, c));
}

TEST_CASE("projection onto the weight polytope") {
  std::vector<double> q{0.1, -0.3, 1.4, 0.0};
  const std::vector<double> up{1, 1, 1, 0};
  project_group(q, up, 2.0);
  CHECK(q[3] == 0.0);
  CHECK(q[2] == 1.0);
  CHECK(q[0] + q[1] + q[2] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(q[0] - q[1] == doctest::Approx(0.4).epsilon(1e-9));

  std::vector<double> ok{0.5, 0.5};
  project_group(ok, std::vector<double>{1, 1}, 0.5);
  CHECK(ok == std::vector<double>{0.5, 0.5});
  CHECK_THROWS_AS(project_group(ok, std::vector<double>{0.1, 0.1}, 1.0), Error);
}

TEST_CASE("solver keeps symmetric instances symmetric") {
  const auto p = symmetric_problem(4, 3);
  const auto q = solve_relaxed(p, small_cfg());
  for (double x : q.gps) CHECK(x == doctest::Approx(q.gps[0]).epsilon(1e-3));
  for (double x : q.vision) CHECK(x == doctest::Approx(q.vision[0]).epsilon(1e-3));
  const auto oracle = brute_force_oracle(p, small_cfg());
  CHECK(oracle.gps == std::vector<double>(4, 1.0));
  CHECK(oracle.vision == std::vector<double>(3, 1.0));
}

TEST_CASE("planted fault is excluded by solver and oracle") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = random_problem(rng, 6, 6);
    p.gps[static_cast<std::size_t>(trial % 6)].alpha = 0.99;
    const auto res = select_landmarks(p, small_cfg());
    CHECK(res.rounded.gps[static_cast<std::size_t>(trial % 6)] == 0.0);
    CHECK(res.relaxed.gps[static_cast<std::size_t>(trial % 6)] < 0.75);
    const auto oracle = brute_force_oracle(p, small_cfg());
    CHECK(oracle.gps[static_cast<std::size_t>(trial % 6)] == 0.0);
  }
}

TEST_CASE("oracle edge cases") {
  auto p = symmetric_problem(3, 2);
  const auto only = brute_force_oracle(p, small_cfg(3, 2));
  CHECK(only.gps == std::vector<double>(3, 1.0));
  CHECK(only.vision == std::vector<double>(2, 1.0));

  auto big = symmetric_problem(12, 9);
  try {
    brute_force_oracle(big, small_cfg());
    FAIL("expected a size error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooLarge);
  }
  try {
    brute_force_oracle(symmetric_problem(2, 2), small_cfg());
    FAIL("expected infeasibility");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInfeasible);
  }
  CHECK_THROWS_AS(solve_relaxed(symmetric_problem(3, 1), small_cfg()), Error);
}

TEST_CASE("raising a fault status never pulls a landmark into the oracle set") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_problem(rng, 5, 4);
    const std::size_t i = static_cast<std::size_t>(trial % 5);
    p.gps[i].alpha = 0.0;
    const auto clean = brute_force_oracle(p, small_cfg());
    p.gps[i].alpha = 0.99;
    const auto faulty = brute_force_oracle(p, small_cfg());
    CHECK(faulty.gps[i] <= clean.gps[i]);
  }
}

TEST_CASE("predicted bound and availability") {
  SelectionProblem p;
  p.motion = PZonotope::point(VectorXd::Zero(7));
  p.gps.push_back({PZonotope::point(VectorXd::Zero(7)), 0.0});
  SelectionConfig c = small_cfg(1, 0);
  auto res = predict_availability(p, AttentionSet{{1}, {}, false}, c);
  CHECK(res.predicted_bound == 0.0);
  CHECK(res.available);

  // Isotropic 3-D box of half-width h gives bound h.
  VectorXd g = VectorXd::Zero(7);
  MatrixXd box = MatrixXd::Zero(7, 3);
  for (int i = 0; i < 3; ++i) box(i, i) = 5.1;
  p.gps[0] = {PZonotope(VectorXd::Zero(7), box, MatrixXd::Zero(7, 7)), 0.0};
  res = predict_availability(p, AttentionSet{{1}, {}, false}, c);
  CHECK(res.predicted_bound == doctest::Approx(5.1));
  CHECK(res.available);
  for (int i = 0; i < 3; ++i) box(i, i) = 7.6;
  p.gps[0] = {PZonotope(VectorXd::Zero(7), box, MatrixXd::Zero(7, 7)), 0.0};
  res = predict_availability(p, AttentionSet{{1}, {}, false}, c);
  CHECK(res.predicted_bound == doctest::Approx(7.6));
  CHECK_FALSE(res.available);
}

TEST_CASE("selection is deterministic") {
  std::mt19937_64 rng(3);
  const auto p = random_problem(rng, 6, 6);
  const auto a = select_landmarks(p, small_cfg());
  const auto b = select_landmarks(p, small_cfg());
  CHECK(a.relaxed.gps == b.relaxed.gps);
  CHECK(a.relaxed.vision == b.relaxed.vision);
  CHECK(a.objective == b.objective);
  CHECK(a.predicted_bound == b.predicted_bound);
}
