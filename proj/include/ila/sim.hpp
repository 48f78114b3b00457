#pragma once

// Seeded scenario synthesis and the closed-loop epoch runner.
//
// A scenario is a forward drive down an alley: the camera looks along +z,
// GPS satellites sit at fixed elevation / azimuth, and vision landmarks lie
// on the two walls and the facade at the far end. Every noise draw is made
// up front, so runs under different selection policies see identical
// measurements.

#include "ila/attention.hpp"
#include "ila/estimator.hpp"
#include "ila/reach.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ila {

struct SatelliteSpec {
  std::string id;
  double elevation_deg = 45.0;
  double azimuth_deg = 0.0;
  double range_m = 2.02e7;
  double clock_correction_m = 0.0;
};

struct TrajectorySpec {
  double speed_mps = 1.5;
  double lateral_amplitude_m = 1.0;
  double lateral_period_s = 30.0;
  double clock_drift_mps = 0.2;
  double clock_walk_m = 0.05;  // per-epoch random-walk sigma of the receiver clock
};

struct SceneSpec {
  int count = 50;
  double wall_offset_m = 8.0;      // walls at x = +-offset
  double near_m = 100.0;           // landmark z range on the walls
  double far_m = 180.0;
  double facade_m = 200.0;         // facade plane z
  double height_min_m = -6.0;      // y range (y points down)
  double height_max_m = 1.2;
  double position_sigma_m = 0.05;  // initial landmark estimate error
  int field_components = 6;
  double wavelength_min_m = 30.0;
  double wavelength_max_m = 80.0;
  double amplitude_scale = 0.001;  // amplitude = scale * wavelength^2
};

struct MotionBoundSpec {
  double position_m = 0.5;
  double position_var_m2 = 0.05;
  double attitude_rad = 0.005;
  double attitude_var_rad2 = 1e-5;
  double clock_m = 1.0;
  double clock_var_m2 = 0.2;
};

struct OdometrySpec {
  double position_sigma_m = 0.03;
  double attitude_sigma_rad = 0.0005;
  double clock_sigma_m = 0.05;
};

struct NoiseSpec {
  double gps_mean_m = 2.0;       // GPS noise mean stays in [-gps_mean_m, gps_mean_m]
  double gps_var_m2 = 2.0;       // GPS noise variance upper bound
  double vision_mean = 1.0;      // intensity units
  double vision_var = 4.0;
  double factor = 3.0;           // covariance multiplication factor of the declared bounds
  MotionBoundSpec motion;
  OdometrySpec odometry;
};

struct FaultWindow {
  double start_s = 9.0;
  double end_s = 24.0;
};

struct FaultRules {
  double multipath_elevation_lo_deg = 20.0;
  double multipath_elevation_hi_deg = 45.0;
  double blockage_elevation_max_deg = 20.0;
  std::vector<std::pair<double, double>> azimuth_bands_deg{{45.0, 135.0}, {225.0, 315.0}};
  double multipath_bias_lo_m = 20.0;
  double multipath_bias_hi_m = 65.0;
  double vision_fault_fraction = 0.1;
  double vision_bias_sigmas = 10.0;

  bool in_band(double azimuth_deg) const;
  bool blocked(double elevation_deg, double azimuth_deg) const;
  bool multipath(double elevation_deg, double azimuth_deg) const;
};

struct SelectionSpec {
  int n_min = 5;
  int l_min = 20;
  double beta = 0.75;
  double gamma = 0.999;
  double alert_limit_m = 7.5;
  int window = 8;
};

/// Eight satellites: two below 20 degrees and two between 20 and 45 degrees
/// inside the fault azimuth bands (both multipath ones east of the alley),
/// four clear of the fault rules.
std::vector<SatelliteSpec> default_satellites();

struct ScenarioConfig {
  double duration_s = 60.0;
  double rate_hz = 1.0;
  std::uint64_t seed = 1;
  TrajectorySpec trajectory;
  std::vector<SatelliteSpec> satellites = default_satellites();
  SceneSpec landmarks;
  CameraIntrinsics camera;
  NoiseSpec noise;
  std::vector<FaultWindow> fault_windows{FaultWindow{}};
  FaultRules fault_rules;
  SelectionSpec selection;

  void validate() const;
  int epochs() const;
  bool in_fault_window(double t_s) const;
  NoiseBounds noise_bounds() const;
  SelectionConfig selection_config() const;
};

struct LandmarkTruth {
  std::string id;
  Vector3d position;
  int surface = 0;
  bool faulty = false;  // carries an intensity bias inside fault windows
};

/// Everything a run needs, fixed by (config, seed).
struct Scenario {
  ScenarioConfig config;
  std::vector<GpsSatellite> satellites;
  std::shared_ptr<const IntensityField> field;
  std::vector<LandmarkTruth> landmarks;
  Keyframe keyframe;                                    // at epoch 0, one key pixel per landmark
  std::map<std::string, LandmarkEstimate> initial_landmarks;
  NavState initial_estimate;
  Matrix7d initial_covariance;

  // Indexed [epoch]; epoch 0 is the initial pose.
  std::vector<NavState> truth;
  std::vector<Vector7d> controls;                       // odometry increments (noisy)
  std::vector<std::vector<double>> gps_noise;           // [epoch][satellite]
  std::vector<std::vector<double>> gps_bias;            // [epoch][satellite], 0 outside faults
  std::vector<std::vector<bool>> gps_visible;           // [epoch][satellite]
  std::vector<std::vector<double>> vision_noise;        // [epoch][landmark]
  std::vector<std::vector<double>> vision_bias;         // [epoch][landmark]

  double time_of(int epoch) const { return epoch / config.rate_hz; }
};

Scenario generate_scenario(const ScenarioConfig& cfg);

/// Measurements of one epoch around the fed-back state, using the
/// estimator's current landmark estimates as the a-priori landmark sets.
EpochInputs sample_measurements(const Scenario& sc, int epoch, const NavState& fed_back,
                                const std::map<std::string, LandmarkEstimate>& landmarks);

enum class Policy { kIla, kGpsOnly, kAll, kRandom };

struct RunOptions {
  Policy policy = Policy::kIla;
  std::vector<std::pair<int, int>> random_counts;  // per epoch (gps, vision) for kRandom
  std::uint64_t random_seed = 0;
  SolverOptions solver;
  EstimatorOptions estimator;
};

struct EpochRecord {
  int epoch = 0;
  double t_s = 0.0;
  double err_3d_m = 0.0;
  double err_2d_m = 0.0;
  double predicted_bound_m = 0.0;
  bool available = false;
  int n_gps_selected = 0;
  int n_vis_selected = 0;
  double mean_alpha_gps = 0.0;
  double mean_alpha_vis = 0.0;
  bool in_fault_window = false;
  double objective = 0.0;
  std::vector<std::string> gps_ids;     // selected
  std::vector<std::string> vision_ids;
  std::vector<std::string> gps_seen;    // every measurement of the epoch, in selection order
  std::vector<std::string> vision_seen;
  AttentionSet selection;
  std::string failure;  // empty when the epoch completed normally
};

std::vector<EpochRecord> run_scenario(const Scenario& sc, const RunOptions& opt = {});

struct RunSummary {
  double max_err_3d_m = 0.0;
  double max_err_2d_m = 0.0;
  double availability_fraction = 0.0;
  int epochs = 0;
  std::uint64_t seed = 0;
  std::string config_digest;
};

RunSummary summarize(const std::vector<EpochRecord>& records, std::uint64_t seed, const std::string& digest);

struct BaselineRow {
  std::string name;
  double max_err_3d_m = 0.0;
  double max_err_2d_m = 0.0;
  double availability_fraction = 0.0;
};

/// Runs the requested baselines ("ila", "gps_only", "all", "random") on one
/// scenario. The random baseline draws `random_runs` selections with the
/// proposed method's per-epoch counts and keeps the per-epoch minimum error.
std::vector<BaselineRow> compare_baselines(const Scenario& sc, const std::vector<std::string>& baselines,
                                           int random_runs);

Policy policy_from_name(const std::string& name);

/// Horizontal error: the plane spanned by x (right) and z (forward).
double horizontal_error(const Vector3d& d);

}  // namespace ila
