#include "ila/sim.hpp"

#include "ila/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace ila {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Independent streams per purpose, so changing one draw never shifts another.
enum Stream : std::uint32_t {
  kClock = 1,
  kOdometry,
  kField,
  kLandmarks,
  kGpsNoise,
  kVisionNoise,
  kFaults,
  kInitial,
  kRandomPolicy,
};

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t tag, std::uint32_t sub = 0) {
  std::seed_seq s{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag, sub};
  return std::mt19937_64(s);
}

double uniform(std::mt19937_64& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }
double normal(std::mt19937_64& g, double sigma) {
  return sigma > 0.0 ? std::normal_distribution<double>(0.0, sigma)(g) : 0.0;
}

double reflect(double x, double b) {
  if (b <= 0.0) return 0.0;
  const double p = 4.0 * b;
  double y = std::fmod(x + b, p);
  if (y < 0.0) y += p;
  return y <= 2.0 * b ? y - b : 3.0 * b - y;
}

Vector3d sky_direction(double el_deg, double az_deg) {
  const double el = el_deg * kDeg, az = az_deg * kDeg;
  return {std::cos(el) * std::sin(az), -std::sin(el), std::cos(el) * std::cos(az)};
}

// Per-epoch draws of a bounded-mean process: the mean walks inside [-b, b],
// the spread has a fixed per-source variance below v.
std::vector<std::vector<double>> bounded_noise(std::mt19937_64& g, int epochs, std::size_t sources, double b,
                                               double v) {
  std::vector<double> mean(sources), sd(sources);
  for (std::size_t i = 0; i < sources; ++i) {
    mean[i] = b > 0.0 ? uniform(g, -b, b) : 0.0;
    sd[i] = v > 0.0 ? std::sqrt(uniform(g, 0.0, v)) : 0.0;
  }
  std::vector<std::vector<double>> out(static_cast<std::size_t>(epochs + 1), std::vector<double>(sources, 0.0));
  for (int k = 1; k <= epochs; ++k)
    for (std::size_t i = 0; i < sources; ++i) {
      mean[i] = reflect(mean[i] + normal(g, 0.1 * b), b);
      out[static_cast<std::size_t>(k)][i] = mean[i] + normal(g, sd[i]);
    }
  return out;
}

IntensityField make_field(const SceneSpec& s, std::mt19937_64& g) {
  IntensityField f;
  f.base = 128.0;
  f.ramp = Vector3d(normal(g, 0.02), normal(g, 0.02), normal(g, 0.02));
  for (int i = 0; i < s.field_components; ++i) {
    Vector3d dir(normal(g, 1.0), normal(g, 1.0), normal(g, 1.0));
    if (dir.norm() < 1e-6) dir = Vector3d::UnitZ();
    const double lambda = uniform(g, s.wavelength_min_m, s.wavelength_max_m);
    f.waves.push_back({dir.normalized() * (2.0 * std::numbers::pi / lambda), s.amplitude_scale * lambda * lambda,
                       uniform(g, 0.0, 2.0 * std::numbers::pi)});
  }
  f.surfaces = {Plane{Vector3d::UnitX(), -s.wall_offset_m}, Plane{Vector3d::UnitX(), s.wall_offset_m},
                Plane{Vector3d::UnitZ(), s.facade_m}};
  return f;
}

double tangent_gradient(const IntensityField& f, const Vector3d& x, int surface) {
  const Vector3d& n = f.surfaces[static_cast<std::size_t>(surface)].normal;
  const Vector3d g = f.albedo_gradient(x);
  return (g - g.dot(n) * n).norm();
}

Matrix7d motion_prior_covariance(const ScenarioConfig& c) {
  const auto& m = c.noise.motion;
  const double f = c.noise.factor;
  Vector7d d;
  d << Vector3d::Constant(f * m.position_var_m2 + m.position_m * m.position_m),
      Vector3d::Constant(f * m.attitude_var_rad2 + m.attitude_rad * m.attitude_rad),
      f * m.clock_var_m2 + m.clock_m * m.clock_m;
  return d.asDiagonal();
}

std::string landmark_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "V%02d", i + 1);
  return buf;
}

}  // namespace

bool FaultRules::in_band(double azimuth_deg) const {
  double az = std::fmod(azimuth_deg, 360.0);
  if (az < 0.0) az += 360.0;
  return std::any_of(azimuth_bands_deg.begin(), azimuth_bands_deg.end(),
                     [&](const auto& b) { return az >= b.first && az <= b.second; });
}

bool FaultRules::blocked(double elevation_deg, double azimuth_deg) const {
  return elevation_deg < blockage_elevation_max_deg && in_band(azimuth_deg);
}

bool FaultRules::multipath(double elevation_deg, double azimuth_deg) const {
  return elevation_deg >= multipath_elevation_lo_deg && elevation_deg <= multipath_elevation_hi_deg &&
         in_band(azimuth_deg);
}

std::vector<SatelliteSpec> default_satellites() {
  return {
      {"G01", 15.0, 90.0, 2.02e7, 0.0},  {"G02", 12.0, 270.0, 2.02e7, 0.0}, {"G03", 30.0, 100.0, 2.02e7, 0.0},
      {"G04", 35.0, 120.0, 2.02e7, 0.0}, {"G05", 60.0, 0.0, 2.02e7, 0.0},   {"G06", 50.0, 180.0, 2.02e7, 0.0},
      {"G07", 75.0, 30.0, 2.02e7, 0.0},  {"G08", 40.0, 340.0, 2.02e7, 0.0},
  };
}

void ScenarioConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) { require(ok, "config: " + msg, ErrorCode::kConfig); };
  need(duration_s > 0.0 && std::isfinite(duration_s), "duration_s must be positive");
  need(rate_hz > 0.0 && std::isfinite(rate_hz), "rate_hz must be positive");
  need(epochs() >= 1, "duration_s * rate_hz must give at least one epoch");
  need(trajectory.speed_mps >= 0.0, "trajectory.speed_mps must be non-negative");
  need(trajectory.lateral_period_s > 0.0, "trajectory.lateral_period_s must be positive");
  need(trajectory.clock_walk_m >= 0.0, "trajectory.clock_walk_m must be non-negative");
  need(!satellites.empty(), "satellites must not be empty");
  for (const auto& s : satellites) {
    need(!s.id.empty(), "satellite ids must be non-empty");
    need(s.elevation_deg > 0.0 && s.elevation_deg <= 90.0, "satellite " + s.id + " elevation must be in (0, 90]");
    need(s.range_m > 1e5, "satellite " + s.id + " range must exceed 100 km");
  }
  for (std::size_t i = 0; i < satellites.size(); ++i)
    for (std::size_t j = i + 1; j < satellites.size(); ++j)
      need(satellites[i].id != satellites[j].id, "duplicate satellite id " + satellites[i].id);
  const auto& l = landmarks;
  need(l.count >= 0 && l.count < 10000, "landmarks.count must be in [0, 9999]");
  need(l.wall_offset_m > 0.0, "landmarks.wall_offset_m must be positive");
  need(l.near_m > 0.0 && l.near_m <= l.far_m, "landmarks.near_m must be positive and at most far_m");
  need(l.facade_m > l.far_m, "landmarks.facade_m must lie beyond far_m");
  need(l.height_min_m <= l.height_max_m, "landmarks.height_min_m must not exceed height_max_m");
  need(l.position_sigma_m >= 0.0, "landmarks.position_sigma_m must be non-negative");
  need(l.field_components >= 1, "landmarks.field_components must be at least 1");
  need(l.wavelength_min_m > 0.0 && l.wavelength_min_m <= l.wavelength_max_m,
       "landmarks wavelengths must be positive and ordered");
  need(l.amplitude_scale > 0.0, "landmarks.amplitude_scale must be positive");
  need(trajectory.speed_mps * duration_s < l.near_m, "the trajectory must end before the nearest landmark");
  camera.validate();
  const auto& n = noise;
  need(n.gps_mean_m >= 0.0 && n.gps_var_m2 >= 0.0, "noise gps bounds must be non-negative");
  need(n.vision_mean >= 0.0 && n.vision_var >= 0.0, "noise vision bounds must be non-negative");
  need(n.factor >= 1.0, "noise.factor must be at least 1");
  const auto& m = n.motion;
  need(m.position_m >= 0.0 && m.position_var_m2 >= 0.0 && m.attitude_rad >= 0.0 && m.attitude_var_rad2 >= 0.0 &&
           m.clock_m >= 0.0 && m.clock_var_m2 >= 0.0,
       "noise.motion bounds must be non-negative");
  need(m.position_var_m2 + m.position_m > 0.0 && m.attitude_var_rad2 + m.attitude_rad > 0.0 &&
           m.clock_var_m2 + m.clock_m > 0.0,
       "noise.motion bounds must not be all zero on an axis");
  const auto& o = n.odometry;
  need(o.position_sigma_m >= 0.0 && o.attitude_sigma_rad >= 0.0 && o.clock_sigma_m >= 0.0,
       "noise.odometry sigmas must be non-negative");
  for (const auto& w : fault_windows) need(w.start_s <= w.end_s, "fault window start must not exceed end");
  const auto& r = fault_rules;
  need(r.multipath_elevation_lo_deg <= r.multipath_elevation_hi_deg, "fault_rules multipath elevations inverted");
  need(r.multipath_bias_lo_m <= r.multipath_bias_hi_m, "fault_rules multipath biases inverted");
  for (const auto& b : r.azimuth_bands_deg) need(b.first <= b.second, "fault_rules azimuth band inverted");
  need(r.vision_fault_fraction >= 0.0 && r.vision_fault_fraction <= 1.0,
       "fault_rules.vision_fault_fraction must be in [0, 1]");
  need(r.vision_bias_sigmas >= 0.0, "fault_rules.vision_bias_sigmas must be non-negative");
  need(selection.window >= 1, "selection.window must be at least 1");
  try {
    selection_config().validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string("config: ") + e.what());
  }
}

int ScenarioConfig::epochs() const { return static_cast<int>(std::llround(duration_s * rate_hz)); }

bool ScenarioConfig::in_fault_window(double t_s) const {
  return std::any_of(fault_windows.begin(), fault_windows.end(),
                     [&](const FaultWindow& w) { return t_s >= w.start_s && t_s <= w.end_s; });
}

NoiseBounds ScenarioConfig::noise_bounds() const {
  const auto& n = noise;
  const auto& m = n.motion;
  NoiseBounds b;
  const AxisBound g{-n.gps_mean_m, n.gps_mean_m, n.gps_var_m2};
  const AxisBound v{-n.vision_mean, n.vision_mean, n.vision_var};
  b.gps = from_bounds(std::span(&g, 1), n.factor);
  b.vision = from_bounds(std::span(&v, 1), n.factor);
  const AxisBound p{-m.position_m, m.position_m, m.position_var_m2};
  const AxisBound a{-m.attitude_rad, m.attitude_rad, m.attitude_var_rad2};
  const AxisBound c{-m.clock_m, m.clock_m, m.clock_var_m2};
  const std::vector<AxisBound> axes{p, p, p, a, a, a, c};
  b.motion = from_bounds(axes, n.factor);
  return b;
}

SelectionConfig ScenarioConfig::selection_config() const {
  SelectionConfig s;
  s.n_min = selection.n_min;
  s.l_min = selection.l_min;
  s.beta = selection.beta;
  s.gamma = selection.gamma;
  s.alert_limit = selection.alert_limit_m;
  s.weights = WeightVector::position_only(kStateDim);
  return s;
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const int n = cfg.epochs();
  const std::uint64_t seed = cfg.seed;
  Scenario sc;
  sc.config = cfg;

  // Truth: a weave down the alley at constant forward speed.
  auto clock_rng = stream(seed, kClock);
  const auto& tr = cfg.trajectory;
  const double w = 2.0 * std::numbers::pi / tr.lateral_period_s;
  double walk = 0.0;
  const double clock0 = uniform(clock_rng, -30.0, 30.0);
  for (int k = 0; k <= n; ++k) {
    const double t = sc.time_of(k);
    if (k > 0) walk += normal(clock_rng, tr.clock_walk_m);
    NavState s;
    s.position = Vector3d(tr.lateral_amplitude_m * std::sin(w * t), 0.0, tr.speed_mps * t);
    s.orientation = Vector3d(0.0, std::atan2(tr.lateral_amplitude_m * w * std::cos(w * t), tr.speed_mps), 0.0);
    s.clock_bias = clock0 + tr.clock_drift_mps * t + walk;
    sc.truth.push_back(s);
  }

  auto odo = stream(seed, kOdometry);
  const auto& o = cfg.noise.odometry;
  sc.controls.assign(static_cast<std::size_t>(n + 1), Vector7d::Zero());
  for (int k = 1; k <= n; ++k) {
    Vector7d u = sc.truth[static_cast<std::size_t>(k)] - sc.truth[static_cast<std::size_t>(k - 1)];
    for (int i = 0; i < 3; ++i) u(i) += normal(odo, o.position_sigma_m);
    for (int i = 3; i < 6; ++i) u(i) += normal(odo, o.attitude_sigma_rad);
    u(6) += normal(odo, o.clock_sigma_m);
    sc.controls[static_cast<std::size_t>(k)] = u;
  }

  for (const auto& s : cfg.satellites)
    sc.satellites.push_back(
        {s.id, s.range_m * sky_direction(s.elevation_deg, s.azimuth_deg), s.clock_correction_m, s.elevation_deg,
         s.azimuth_deg});

  // Scene: landmarks first, then a field whose texture is not flat at any of them.
  const auto& ls = cfg.landmarks;
  auto lrng = stream(seed, kLandmarks);
  for (int i = 0; i < ls.count; ++i) {
    LandmarkTruth lt;
    lt.id = landmark_id(i);
    const double u = uniform(lrng, 0.0, 1.0);
    const double y = uniform(lrng, ls.height_min_m, ls.height_max_m);
    if (u < 0.8) {
      lt.surface = u < 0.4 ? 0 : 1;
      const double x = lt.surface == 0 ? -ls.wall_offset_m : ls.wall_offset_m;
      lt.position = Vector3d(x, y, uniform(lrng, ls.near_m, ls.far_m));
    } else {
      lt.surface = 2;
      lt.position = Vector3d(uniform(lrng, -ls.wall_offset_m + 0.5, ls.wall_offset_m - 0.5), y, ls.facade_m);
    }
    sc.landmarks.push_back(lt);
  }
  IntensityField field;
  for (std::uint32_t attempt = 0;; ++attempt) {
    auto frng = stream(seed, kField, attempt);
    field = make_field(ls, frng);
    const bool flat = std::any_of(sc.landmarks.begin(), sc.landmarks.end(), [&](const LandmarkTruth& l) {
      return tangent_gradient(field, l.position, l.surface) < 1e-3;
    });
    if (!flat) break;
    require(attempt < 64, "scenario: could not draw a textured intensity field", ErrorCode::kRuntime);
  }
  sc.field = std::make_shared<const IntensityField>(std::move(field));

  auto frng = stream(seed, kFaults);
  const auto& rules = cfg.fault_rules;
  const int n_faulty = static_cast<int>(std::lround(rules.vision_fault_fraction * ls.count));
  std::vector<int> order(static_cast<std::size_t>(ls.count));
  for (int i = 0; i < ls.count; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), frng);
  for (int i = 0; i < n_faulty; ++i) sc.landmarks[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])].faulty = true;
  std::vector<double> sat_bias(cfg.satellites.size(), 0.0);
  for (std::size_t i = 0; i < cfg.satellites.size(); ++i)
    sat_bias[i] = uniform(frng, rules.multipath_bias_lo_m, rules.multipath_bias_hi_m);
  std::vector<double> vis_bias(sc.landmarks.size(), 0.0);
  for (auto& b : vis_bias)
    b = (uniform(frng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0) * rules.vision_bias_sigmas * std::sqrt(cfg.noise.vision_var);

  auto init = stream(seed, kInitial);
  const NavState& x0 = sc.truth.front();
  sc.initial_estimate = x0;
  for (int i = 0; i < 3; ++i) sc.initial_estimate.position(i) += normal(init, o.position_sigma_m);
  for (int i = 0; i < 3; ++i) sc.initial_estimate.orientation(i) += normal(init, o.attitude_sigma_rad);
  sc.initial_estimate.clock_bias += normal(init, o.clock_sigma_m);
  sc.initial_covariance = motion_prior_covariance(cfg);

  const double pvar = std::max(ls.position_sigma_m * ls.position_sigma_m, 1e-6);
  sc.keyframe.state = x0;
  const Matrix3d r0t = rotation(x0.orientation).transpose();
  for (const auto& l : sc.landmarks) {
    LandmarkEstimate e;
    e.position = l.position + Vector3d(normal(init, ls.position_sigma_m), normal(init, ls.position_sigma_m),
                                       normal(init, ls.position_sigma_m));
    e.covariance = pvar * Matrix3d::Identity();
    const Vector3d pc = r0t * (e.position - x0.position);
    sc.keyframe.key_pixels.push_back(project(cfg.camera, pc));
    sc.keyframe.inverse_depths.push_back(1.0 / pc.z());
    sc.keyframe.intensities.push_back(sc.field->albedo(l.position));
    sc.initial_landmarks.emplace(l.id, e);
  }

  auto grng = stream(seed, kGpsNoise);
  sc.gps_noise = bounded_noise(grng, n, cfg.satellites.size(), cfg.noise.gps_mean_m, cfg.noise.gps_var_m2);
  auto vrng = stream(seed, kVisionNoise);
  sc.vision_noise = bounded_noise(vrng, n, sc.landmarks.size(), cfg.noise.vision_mean, cfg.noise.vision_var);

  sc.gps_bias.assign(static_cast<std::size_t>(n + 1), std::vector<double>(cfg.satellites.size(), 0.0));
  sc.gps_visible.assign(static_cast<std::size_t>(n + 1), std::vector<bool>(cfg.satellites.size(), true));
  sc.vision_bias.assign(static_cast<std::size_t>(n + 1), std::vector<double>(sc.landmarks.size(), 0.0));
  for (int k = 0; k <= n; ++k) {
    if (!cfg.in_fault_window(sc.time_of(k))) continue;
    const auto kk = static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < cfg.satellites.size(); ++i) {
      const auto& s = cfg.satellites[i];
      if (rules.blocked(s.elevation_deg, s.azimuth_deg)) sc.gps_visible[kk][i] = false;
      if (rules.multipath(s.elevation_deg, s.azimuth_deg)) sc.gps_bias[kk][i] = sat_bias[i];
    }
    for (std::size_t j = 0; j < sc.landmarks.size(); ++j)
      if (sc.landmarks[j].faulty) sc.vision_bias[kk][j] = vis_bias[j];
  }
  return sc;
}

EpochInputs sample_measurements(const Scenario& sc, int epoch, const NavState& fed_back,
                                const std::map<std::string, LandmarkEstimate>& landmarks) {
  require(epoch >= 1 && epoch < static_cast<int>(sc.truth.size()), "sample: epoch out of range");
  const auto k = static_cast<std::size_t>(epoch);
  const NavState& truth = sc.truth[k];
  EpochInputs in;
  in.motion_mean = motion_predict(MotionModel{}, fed_back, sc.controls[k]);
  in.a_priori = in.motion_mean;
  for (std::size_t i = 0; i < sc.satellites.size(); ++i) {
    if (!sc.gps_visible[k][i]) continue;
    const auto& sat = sc.satellites[i];
    in.gps.push_back({sat, gps_predict(truth, sat) + sc.gps_noise[k][i] + sc.gps_bias[k][i]});
  }
  for (std::size_t j = 0; j < sc.landmarks.size(); ++j) {
    const auto& l = sc.landmarks[j];
    auto it = landmarks.find(l.id);
    if (it == landmarks.end()) continue;
    VisionLandmark lm;
    lm.id = l.id;
    lm.position = it->second.position;
    lm.position_set = it->second.as_set();
    lm.source_pixel = sc.keyframe.key_pixels[j];
    lm.surface = l.surface;
    in.vision.push_back({lm, sc.field->albedo(l.position) + sc.vision_noise[k][j] + sc.vision_bias[k][j]});
  }
  in.keyframe = sc.keyframe;
  in.intrinsics = sc.config.camera;
  in.image.emplace(sc.field, truth, sc.config.camera);
  return in;
}

double horizontal_error(const Vector3d& d) { return std::hypot(d.x(), d.z()); }

Policy policy_from_name(const std::string& name) {
  if (name == "ila") return Policy::kIla;
  if (name == "gps_only") return Policy::kGpsOnly;
  if (name == "all") return Policy::kAll;
  if (name == "random") return Policy::kRandom;
  throw Error(ErrorCode::kInvalidInput, "unknown baseline '" + name + "' (expected ila, gps_only, all or random)");
}

namespace {

AttentionSet fixed_selection(const SelectionProblem& p, bool gps, bool vision) {
  AttentionSet a;
  a.gps.assign(p.gps.size(), gps ? 1.0 : 0.0);
  a.vision.assign(p.vision.size(), 0.0);
  if (vision)
    for (std::size_t j = 0; j < p.vision.size(); ++j) a.vision[j] = p.allowed_vision(j) ? 1.0 : 0.0;
  return a;
}

AttentionSet random_selection(const SelectionProblem& p, int n_gps, int n_vis, std::mt19937_64& g) {
  AttentionSet a = fixed_selection(p, false, false);
  std::vector<std::size_t> gi(p.gps.size()), vi;
  for (std::size_t i = 0; i < gi.size(); ++i) gi[i] = i;
  for (std::size_t j = 0; j < p.vision.size(); ++j)
    if (p.allowed_vision(j)) vi.push_back(j);
  std::shuffle(gi.begin(), gi.end(), g);
  std::shuffle(vi.begin(), vi.end(), g);
  for (std::size_t i = 0; i < std::min(gi.size(), static_cast<std::size_t>(std::max(n_gps, 0))); ++i) a.gps[gi[i]] = 1.0;
  for (std::size_t j = 0; j < std::min(vi.size(), static_cast<std::size_t>(std::max(n_vis, 0))); ++j)
    a.vision[vi[j]] = 1.0;
  return a;
}

double mean_of(const std::vector<LandmarkReach>& ls) {
  double s = 0.0;
  int n = 0;
  for (const auto& l : ls) {
    if (!l.informative) continue;
    s += l.joint_status;
    ++n;
  }
  return n == 0 ? 0.0 : s / n;
}

}  // namespace

std::vector<EpochRecord> run_scenario(const Scenario& sc, const RunOptions& opt) {
  const auto& cfg = sc.config;
  const NoiseBounds bounds = cfg.noise_bounds();
  const SelectionConfig selcfg = cfg.selection_config();
  ReachPipeline pipeline(bounds, cfg.selection.window);
  const Matrix7d prior_cov = motion_prior_covariance(cfg);
  auto rng = stream(opt.random_seed, kRandomPolicy);

  NavState fed_back = sc.initial_estimate;
  auto landmarks = sc.initial_landmarks;
  std::vector<EpochRecord> out;
  const int n = static_cast<int>(sc.truth.size()) - 1;
  for (int k = 1; k <= n; ++k) {
    EpochRecord rec;
    rec.epoch = k;
    rec.t_s = sc.time_of(k);
    rec.in_fault_window = cfg.in_fault_window(rec.t_s);
    const NavState& truth = sc.truth[static_cast<std::size_t>(k)];
    const EpochInputs in = sample_measurements(sc, k, fed_back, landmarks);
    NavState estimate = in.motion_mean;
    for (const auto& m : in.gps) rec.gps_seen.push_back(m.sat.id);
    for (const auto& m : in.vision) rec.vision_seen.push_back(m.landmark.id);
    try {
      const EpochReach reach = pipeline.process(in);
      const SelectionProblem prob = SelectionProblem::from_reach(reach);
      rec.mean_alpha_gps = mean_of(reach.gps);
      rec.mean_alpha_vis = mean_of(reach.vision);

      SelectionResult res;
      switch (opt.policy) {
        case Policy::kIla:
          try {
            res = select_landmarks(prob, selcfg, opt.solver);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kInfeasible) throw;
            res = predict_availability(prob, fixed_selection(prob, true, true), selcfg);
            res.available = false;
            rec.failure = e.what();
          }
          break;
        case Policy::kGpsOnly:
          res = predict_availability(prob, fixed_selection(prob, true, false), selcfg);
          break;
        case Policy::kAll:
          res = predict_availability(prob, fixed_selection(prob, true, true), selcfg);
          break;
        case Policy::kRandom: {
          const auto idx = static_cast<std::size_t>(k - 1);
          const auto counts = idx < opt.random_counts.size()
                                  ? opt.random_counts[idx]
                                  : std::pair<int, int>{static_cast<int>(prob.gps.size()), 0};
          res = predict_availability(prob, random_selection(prob, counts.first, counts.second, rng), selcfg);
          break;
        }
      }
      rec.selection = res.rounded;
      rec.predicted_bound_m = res.predicted_bound;
      rec.available = res.available;
      rec.objective = res.objective;
      for (std::size_t i = 0; i < in.gps.size(); ++i)
        if (res.rounded.gps[i] >= 0.5) rec.gps_ids.push_back(in.gps[i].sat.id);
      for (std::size_t j = 0; j < in.vision.size(); ++j)
        if (res.rounded.vision[j] >= 0.5) rec.vision_ids.push_back(in.vision[j].landmark.id);
      rec.n_gps_selected = static_cast<int>(rec.gps_ids.size());
      rec.n_vis_selected = static_cast<int>(rec.vision_ids.size());

      EstimatorState prior{in.motion_mean, prior_cov, landmarks};
      try {
        const EstimatorState est = estimate_state(in, res.rounded, prior, bounds, opt.estimator);
        estimate = est.state;
        landmarks = update_landmarks(in, res.rounded, estimate, landmarks, bounds, opt.estimator);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kEstimationFailure) throw;
        rec.failure = e.what();
        rec.available = false;
        estimate = in.motion_mean;
      }
    } catch (const Error& e) {
      if (rec.failure.empty()) rec.failure = e.what();
      rec.available = false;
      estimate = in.motion_mean;
      if (!std::isfinite(rec.predicted_bound_m) || rec.predicted_bound_m == 0.0)
        rec.predicted_bound_m = std::numeric_limits<double>::infinity();
    }
    const Vector3d d = estimate.position - truth.position;
    rec.err_3d_m = d.norm();
    rec.err_2d_m = horizontal_error(d);
    fed_back = feedback_motion(rec.available, estimate, in.motion_mean);
    out.push_back(std::move(rec));
  }
  return out;
}

RunSummary summarize(const std::vector<EpochRecord>& records, std::uint64_t seed, const std::string& digest) {
  RunSummary s;
  s.seed = seed;
  s.config_digest = digest;
  s.epochs = static_cast<int>(records.size());
  int avail = 0;
  for (const auto& r : records) {
    s.max_err_3d_m = std::max(s.max_err_3d_m, r.err_3d_m);
    s.max_err_2d_m = std::max(s.max_err_2d_m, r.err_2d_m);
    avail += r.available ? 1 : 0;
  }
  s.availability_fraction = records.empty() ? 0.0 : static_cast<double>(avail) / static_cast<double>(records.size());
  return s;
}

std::vector<BaselineRow> compare_baselines(const Scenario& sc, const std::vector<std::string>& baselines,
                                           int random_runs) {
  require(!baselines.empty(), "compare: no baselines requested");
  for (const auto& b : baselines) policy_from_name(b);
  require(random_runs >= 1, "compare: random runs must be at least 1");

  std::vector<EpochRecord> ila;
  auto need_ila = [&]() -> const std::vector<EpochRecord>& {
    if (ila.empty()) ila = run_scenario(sc, RunOptions{});
    return ila;
  };
  auto row_of = [](const std::string& name, const std::vector<EpochRecord>& recs) {
    const RunSummary s = summarize(recs, 0, "");
    return BaselineRow{name, s.max_err_3d_m, s.max_err_2d_m, s.availability_fraction};
  };

  std::vector<BaselineRow> rows;
  for (const auto& name : baselines) {
    const Policy p = policy_from_name(name);
    if (p == Policy::kIla) {
      rows.push_back(row_of(name, need_ila()));
    } else if (p == Policy::kRandom) {
      RunOptions ro;
      ro.policy = Policy::kRandom;
      for (const auto& r : need_ila()) ro.random_counts.emplace_back(r.n_gps_selected, r.n_vis_selected);
      std::vector<double> best3, best2;
      double avail = 0.0;
      for (int run = 0; run < random_runs; ++run) {
        ro.random_seed = sc.config.seed * 1000003ULL + static_cast<std::uint64_t>(run);
        const auto recs = run_scenario(sc, ro);
        if (best3.empty()) {
          best3.assign(recs.size(), std::numeric_limits<double>::infinity());
          best2 = best3;
        }
        for (std::size_t i = 0; i < recs.size(); ++i) {
          best3[i] = std::min(best3[i], recs[i].err_3d_m);
          best2[i] = std::min(best2[i], recs[i].err_2d_m);
        }
        avail += summarize(recs, 0, "").availability_fraction;
      }
      BaselineRow row{name, 0.0, 0.0, avail / random_runs};
      for (std::size_t i = 0; i < best3.size(); ++i) {
        row.max_err_3d_m = std::max(row.max_err_3d_m, best3[i]);
        row.max_err_2d_m = std::max(row.max_err_2d_m, best2[i]);
      }
      rows.push_back(row);
    } else {
      RunOptions ro;
      ro.policy = p;
      rows.push_back(row_of(name, run_scenario(sc, ro)));
    }
  }
  return rows;
}

}  // namespace ila
