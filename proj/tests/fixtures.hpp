#pragma once

// Small builders shared by the unit and acceptance tests.

#include "ila/attention.hpp"
#include "ila/models.hpp"
#include "ila/reach.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

using namespace ila;

inline GpsSatellite satellite(const std::string& id, double elev_deg, double az_deg, double range = 2.02e7) {
  const double el = elev_deg * M_PI / 180.0, az = az_deg * M_PI / 180.0;
  GpsSatellite s;
  s.id = id;
  s.position = range * Vector3d(std::cos(el) * std::sin(az), -std::sin(el), std::cos(el) * std::cos(az));
  s.elevation_deg = elev_deg;
  s.azimuth_deg = az_deg;
  return s;
}

inline std::vector<GpsSatellite> sky(int n) {
  std::vector<GpsSatellite> out;
  for (int i = 0; i < n; ++i)
    out.push_back(satellite("G" + std::to_string(i + 1), 25.0 + 50.0 * ((i * 37) % 11) / 10.0, (360.0 * i) / n + 10.0));
  return out;
}

inline PZonotope gps_bounds(double mean = 5.0, double var = 5.0, double factor = 3.0) {
  const std::vector<AxisBound> a{{-mean, mean, var}};
  return from_bounds(a, factor);
}

inline PZonotope motion_bounds(double pos = 0.5, double pos_var = 0.1, double ang = 0.002, double clk = 0.5) {
  std::vector<AxisBound> a;
  for (int i = 0; i < 3; ++i) a.push_back({-pos, pos, pos_var});
  for (int i = 0; i < 3; ++i) a.push_back({-ang, ang, ang * ang});
  a.push_back({-clk, clk, pos_var});
  return from_bounds(a, 3.0);
}

/// GPS-only epoch whose measurements are exact at `truth`, plus per-satellite
/// additive errors.
inline EpochInputs gps_epoch(const NavState& truth, const NavState& apriori, const std::vector<GpsSatellite>& sats,
                             const std::vector<double>& errors) {
  EpochInputs in;
  in.a_priori = apriori;
  in.motion_mean = apriori;
  for (std::size_t i = 0; i < sats.size(); ++i)
    in.gps.push_back({sats[i], gps_predict(truth, sats[i]) + (i < errors.size() ? errors[i] : 0.0)});
  return in;
}

/// Random selection instance with rank-one members in a 7-D state.
inline SelectionProblem random_problem(std::mt19937_64& rng, int n_gps, int n_vis) {
  std::uniform_real_distribution<double> u(-1, 1), pos(0, 1);
  SelectionProblem p;
  p.motion = motion_bounds(0.3 + 0.5 * pos(rng), 0.05, 0.002, 0.3);
  auto member = [&] {
    VectorXd dir = VectorXd::NullaryExpr(7, [&] { return u(rng); });
    dir.segment(3, 3) *= 0.01;
    const double g = 1.0 + 4.0 * pos(rng);
    const double s = 1.0 + 10.0 * pos(rng);
    const PZonotope base(VectorXd::Constant(1, 2.0 * u(rng)), MatrixXd::Constant(1, 1, g), MatrixXd::Constant(1, 1, s));
    return Member{linear_map(dir, base), 0.3 * pos(rng) * pos(rng)};
  };
  for (int i = 0; i < n_gps; ++i) p.gps.push_back(member());
  for (int j = 0; j < n_vis; ++j) p.vision.push_back(member());
  return p;
}

}  // namespace fixtures
