#include "ila/io.hpp"

#include "ila/error.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ila::io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::kConfig, path + ": " + msg);
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

int integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < INT32_MIN || v > INT32_MAX) fail(path, "out of range");
  return static_cast<int>(v);
}

std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

const Json& array(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

VectorXd vector_of(const Json& j, const std::string& path, Eigen::Index n = -1) {
  array(j, path);
  if (n >= 0 && static_cast<Eigen::Index>(j.size()) != n)
    fail(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

MatrixXd matrix_of(const Json& j, const std::string& path, Eigen::Index rows, Eigen::Index cols = -1) {
  array(j, path);
  if (static_cast<Eigen::Index>(j.size()) != rows)
    fail(path, "expected " + std::to_string(rows) + " rows, got " + std::to_string(j.size()));
  if (rows == 0) return MatrixXd(0, std::max<Eigen::Index>(cols, 0));
  if (cols < 0) cols = static_cast<Eigen::Index>(array(j[0], path + "[0]").size());
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    m.row(r) = vector_of(j[static_cast<std::size_t>(r)], path + "[" + std::to_string(r) + "]", cols).transpose();
  return m;
}

Json vec(const Eigen::Ref<const VectorXd>& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json mat(const MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec(m.row(r).transpose()));
  return a;
}

// Object view that records which keys were read and rejects the rest.
class Obj {
 public:
  Obj(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& need(const std::string& key) {
    const Json* v = find(key);
    if (!v) fail(at(key), "missing");
    return *v;
  }

  void num(const std::string& key, double& out) {
    if (const Json* v = find(key)) out = number(*v, at(key));
  }
  void num(const std::string& key, int& out) {
    if (const Json* v = find(key)) out = integer(*v, at(key));
  }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown key");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json state_to_json(const NavState& s) {
  return {{"position", vec(s.position)}, {"orientation", vec(s.orientation)}, {"clock_bias", s.clock_bias}};
}

NavState state_from_json(const Json& j, const std::string& path) {
  Obj o(j, path);
  NavState s;
  s.position = vector_of(o.need("position"), o.at("position"), 3);
  s.orientation = vector_of(o.need("orientation"), o.at("orientation"), 3);
  s.clock_bias = number(o.need("clock_bias"), o.at("clock_bias"));
  o.done();
  return s;
}

Json camera_to_json(const CameraIntrinsics& k) { return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}}; }

void camera_from(Obj o, CameraIntrinsics& k) {
  o.num("fx", k.fx);
  o.num("fy", k.fy);
  o.num("cx", k.cx);
  o.num("cy", k.cy);
  o.done();
}

Json field_to_json(const IntensityField& f) {
  Json waves = Json::array(), surfaces = Json::array();
  for (const auto& w : f.waves) waves.push_back({{"wavevector", vec(w.wavevector)}, {"amplitude", w.amplitude}, {"phase", w.phase}});
  for (const auto& s : f.surfaces) surfaces.push_back({{"normal", vec(s.normal)}, {"offset", s.offset}});
  return {{"base", f.base}, {"ramp", vec(f.ramp)}, {"waves", waves}, {"surfaces", surfaces}};
}

IntensityField field_from_json(const Json& j, const std::string& path) {
  Obj o(j, path);
  IntensityField f;
  o.num("base", f.base);
  if (const Json* r = o.find("ramp")) f.ramp = vector_of(*r, o.at("ramp"), 3);
  if (const Json* w = o.find("waves")) {
    array(*w, o.at("waves"));
    for (std::size_t i = 0; i < w->size(); ++i) {
      Obj wo((*w)[i], o.at("waves") + "[" + std::to_string(i) + "]");
      Wave wave;
      wave.wavevector = vector_of(wo.need("wavevector"), wo.at("wavevector"), 3);
      wave.amplitude = number(wo.need("amplitude"), wo.at("amplitude"));
      wave.phase = number(wo.need("phase"), wo.at("phase"));
      wo.done();
      f.waves.push_back(wave);
    }
  }
  const Json& s = array(o.need("surfaces"), o.at("surfaces"));
  for (std::size_t i = 0; i < s.size(); ++i) {
    Obj so(s[i], o.at("surfaces") + "[" + std::to_string(i) + "]");
    Plane p;
    p.normal = vector_of(so.need("normal"), so.at("normal"), 3);
    p.offset = number(so.need("offset"), so.at("offset"));
    if (std::abs(p.normal.norm() - 1.0) > 1e-9) fail(so.at("normal"), "must be a unit vector");
    so.done();
    f.surfaces.push_back(p);
  }
  o.done();
  return f;
}

Json history_to_json(const std::map<std::string, std::vector<double>>& h) {
  Json o = Json::object();
  for (const auto& [id, v] : h) o[id] = v;
  return o;
}

std::map<std::string, std::vector<double>> history_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  std::map<std::string, std::vector<double>> h;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string p = path + "." + it.key();
    const VectorXd v = vector_of(it.value(), p);
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v(i) < 0.0 || v(i) > 1.0) fail(p + "[" + std::to_string(i) + "]", "status must be in [0, 1]");
    h[it.key()] = std::vector<double>(v.data(), v.data() + v.size());
  }
  return h;
}

std::map<std::string, PZonotope> overrides_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  std::map<std::string, PZonotope> out;
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = set_from_json(it.value(), path + "." + it.key());
  return out;
}

Json q_object(const std::vector<std::string>& ids, const std::vector<double>& q) {
  Json o = Json::object();
  for (std::size_t i = 0; i < ids.size() && i < q.size(); ++i) o[ids[i]] = q[i];
  return o;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

Json set_to_json(const PZonotope& p) {
  return {{"c", vec(p.center)}, {"G", mat(p.generators)}, {"Sigma", mat(p.covariance)}};
}

PZonotope set_from_json(const Json& j, const std::string& path) {
  Obj o(j, path);
  const VectorXd c = vector_of(o.need("c"), o.at("c"));
  const auto n = c.size();
  if (n == 0) fail(o.at("c"), "must not be empty");
  MatrixXd g(n, 0);
  if (const Json* gj = o.find("G")) {
    array(*gj, o.at("G"));
    if (!gj->empty()) g = matrix_of(*gj, o.at("G"), n);
  }
  MatrixXd sigma = MatrixXd::Zero(n, n);
  if (const Json* sj = o.find("Sigma")) sigma = matrix_of(*sj, o.at("Sigma"), n, n);
  o.done();
  try {
    return PZonotope(c, g, sigma);
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

Json config_to_json(const ScenarioConfig& c) {
  Json sats = Json::array();
  for (const auto& s : c.satellites)
    sats.push_back({{"id", s.id},
                    {"elevation_deg", s.elevation_deg},
                    {"azimuth_deg", s.azimuth_deg},
                    {"range_m", s.range_m},
                    {"clock_correction_m", s.clock_correction_m}});
  Json windows = Json::array();
  for (const auto& w : c.fault_windows) windows.push_back({{"start_s", w.start_s}, {"end_s", w.end_s}});
  Json bands = Json::array();
  for (const auto& b : c.fault_rules.azimuth_bands_deg) bands.push_back({b.first, b.second});
  const auto& t = c.trajectory;
  const auto& l = c.landmarks;
  const auto& n = c.noise;
  const auto& r = c.fault_rules;
  const auto& s = c.selection;
  return {
      {"duration_s", c.duration_s},
      {"rate_hz", c.rate_hz},
      {"seed", c.seed},
      {"trajectory",
       {{"speed_mps", t.speed_mps},
        {"lateral_amplitude_m", t.lateral_amplitude_m},
        {"lateral_period_s", t.lateral_period_s},
        {"clock_drift_mps", t.clock_drift_mps},
        {"clock_walk_m", t.clock_walk_m}}},
      {"satellites", sats},
      {"landmarks",
       {{"count", l.count},
        {"wall_offset_m", l.wall_offset_m},
        {"near_m", l.near_m},
        {"far_m", l.far_m},
        {"facade_m", l.facade_m},
        {"height_min_m", l.height_min_m},
        {"height_max_m", l.height_max_m},
        {"position_sigma_m", l.position_sigma_m},
        {"field_components", l.field_components},
        {"wavelength_min_m", l.wavelength_min_m},
        {"wavelength_max_m", l.wavelength_max_m},
        {"amplitude_scale", l.amplitude_scale}}},
      {"camera", camera_to_json(c.camera)},
      {"noise",
       {{"gps_mean_m", n.gps_mean_m},
        {"gps_var_m2", n.gps_var_m2},
        {"vision_mean", n.vision_mean},
        {"vision_var", n.vision_var},
        {"factor", n.factor},
        {"motion",
         {{"position_m", n.motion.position_m},
          {"position_var_m2", n.motion.position_var_m2},
          {"attitude_rad", n.motion.attitude_rad},
          {"attitude_var_rad2", n.motion.attitude_var_rad2},
          {"clock_m", n.motion.clock_m},
          {"clock_var_m2", n.motion.clock_var_m2}}},
        {"odometry",
         {{"position_sigma_m", n.odometry.position_sigma_m},
          {"attitude_sigma_rad", n.odometry.attitude_sigma_rad},
          {"clock_sigma_m", n.odometry.clock_sigma_m}}}}},
      {"fault_windows", windows},
      {"fault_rules",
       {{"multipath_elevation_lo_deg", r.multipath_elevation_lo_deg},
        {"multipath_elevation_hi_deg", r.multipath_elevation_hi_deg},
        {"blockage_elevation_max_deg", r.blockage_elevation_max_deg},
        {"azimuth_bands_deg", bands},
        {"multipath_bias_lo_m", r.multipath_bias_lo_m},
        {"multipath_bias_hi_m", r.multipath_bias_hi_m},
        {"vision_fault_fraction", r.vision_fault_fraction},
        {"vision_bias_sigmas", r.vision_bias_sigmas}}},
      {"selection",
       {{"n_min", s.n_min},
        {"l_min", s.l_min},
        {"beta", s.beta},
        {"gamma", s.gamma},
        {"alert_limit_m", s.alert_limit_m},
        {"window", s.window}}},
  };
}

namespace {

ScenarioConfig read_config(const Json& j) {
  ScenarioConfig c;
  Obj o(j, "");
  o.num("duration_s", c.duration_s);
  o.num("rate_hz", c.rate_hz);
  if (const Json* s = o.find("seed")) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<std::int64_t>() >= 0))
      fail("seed", "expected a non-negative integer");
    c.seed = s->get<std::uint64_t>();
  }
  if (const Json* v = o.find("trajectory")) {
    Obj t(*v, "trajectory");
    t.num("speed_mps", c.trajectory.speed_mps);
    t.num("lateral_amplitude_m", c.trajectory.lateral_amplitude_m);
    t.num("lateral_period_s", c.trajectory.lateral_period_s);
    t.num("clock_drift_mps", c.trajectory.clock_drift_mps);
    t.num("clock_walk_m", c.trajectory.clock_walk_m);
    t.done();
  }
  if (const Json* v = o.find("satellites")) {
    array(*v, "satellites");
    c.satellites.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      Obj s((*v)[i], "satellites[" + std::to_string(i) + "]");
      SatelliteSpec sat;
      sat.id = text(s.need("id"), s.at("id"));
      s.num("elevation_deg", sat.elevation_deg);
      s.num("azimuth_deg", sat.azimuth_deg);
      s.num("range_m", sat.range_m);
      s.num("clock_correction_m", sat.clock_correction_m);
      s.done();
      c.satellites.push_back(sat);
    }
  }
  if (const Json* v = o.find("landmarks")) {
    Obj l(*v, "landmarks");
    auto& s = c.landmarks;
    l.num("count", s.count);
    l.num("wall_offset_m", s.wall_offset_m);
    l.num("near_m", s.near_m);
    l.num("far_m", s.far_m);
    l.num("facade_m", s.facade_m);
    l.num("height_min_m", s.height_min_m);
    l.num("height_max_m", s.height_max_m);
    l.num("position_sigma_m", s.position_sigma_m);
    l.num("field_components", s.field_components);
    l.num("wavelength_min_m", s.wavelength_min_m);
    l.num("wavelength_max_m", s.wavelength_max_m);
    l.num("amplitude_scale", s.amplitude_scale);
    l.done();
  }
  if (const Json* v = o.find("camera")) camera_from(Obj(*v, "camera"), c.camera);
  if (const Json* v = o.find("noise")) {
    Obj n(*v, "noise");
    n.num("gps_mean_m", c.noise.gps_mean_m);
    n.num("gps_var_m2", c.noise.gps_var_m2);
    n.num("vision_mean", c.noise.vision_mean);
    n.num("vision_var", c.noise.vision_var);
    n.num("factor", c.noise.factor);
    if (const Json* m = n.find("motion")) {
      Obj mo(*m, "noise.motion");
      auto& b = c.noise.motion;
      mo.num("position_m", b.position_m);
      mo.num("position_var_m2", b.position_var_m2);
      mo.num("attitude_rad", b.attitude_rad);
      mo.num("attitude_var_rad2", b.attitude_var_rad2);
      mo.num("clock_m", b.clock_m);
      mo.num("clock_var_m2", b.clock_var_m2);
      mo.done();
    }
    if (const Json* m = n.find("odometry")) {
      Obj od(*m, "noise.odometry");
      auto& d = c.noise.odometry;
      od.num("position_sigma_m", d.position_sigma_m);
      od.num("attitude_sigma_rad", d.attitude_sigma_rad);
      od.num("clock_sigma_m", d.clock_sigma_m);
      od.done();
    }
    n.done();
  }
  if (const Json* v = o.find("fault_windows")) {
    array(*v, "fault_windows");
    c.fault_windows.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      Obj w((*v)[i], "fault_windows[" + std::to_string(i) + "]");
      FaultWindow fw;
      fw.start_s = number(w.need("start_s"), w.at("start_s"));
      fw.end_s = number(w.need("end_s"), w.at("end_s"));
      w.done();
      c.fault_windows.push_back(fw);
    }
  }
  if (const Json* v = o.find("fault_rules")) {
    Obj r(*v, "fault_rules");
    auto& f = c.fault_rules;
    r.num("multipath_elevation_lo_deg", f.multipath_elevation_lo_deg);
    r.num("multipath_elevation_hi_deg", f.multipath_elevation_hi_deg);
    r.num("blockage_elevation_max_deg", f.blockage_elevation_max_deg);
    if (const Json* b = r.find("azimuth_bands_deg")) {
      const std::string p = r.at("azimuth_bands_deg");
      array(*b, p);
      f.azimuth_bands_deg.clear();
      for (std::size_t i = 0; i < b->size(); ++i) {
        const VectorXd band = vector_of((*b)[i], p + "[" + std::to_string(i) + "]", 2);
        f.azimuth_bands_deg.emplace_back(band(0), band(1));
      }
    }
    r.num("multipath_bias_lo_m", f.multipath_bias_lo_m);
    r.num("multipath_bias_hi_m", f.multipath_bias_hi_m);
    r.num("vision_fault_fraction", f.vision_fault_fraction);
    r.num("vision_bias_sigmas", f.vision_bias_sigmas);
    r.done();
  }
  if (const Json* v = o.find("selection")) {
    Obj s(*v, "selection");
    s.num("n_min", c.selection.n_min);
    s.num("l_min", c.selection.l_min);
    s.num("beta", c.selection.beta);
    s.num("gamma", c.selection.gamma);
    s.num("alert_limit_m", c.selection.alert_limit_m);
    s.num("window", c.selection.window);
    s.done();
  }
  o.done();
  c.validate();
  return c;
}

}  // namespace

ScenarioConfig config_from_json(const Json& j) {
  try {
    return read_config(j);
  } catch (const Error& e) {
    const std::string what = e.what();
    if (e.code() != ErrorCode::kConfig || what.rfind("config: ", 0) == 0) throw;
    throw Error(ErrorCode::kConfig, "config: " + what);
  }
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kConfig, "config: cannot open " + path);
  Json j;
  try {
    j = Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kConfig, "config: " + path + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_digest(const ScenarioConfig& cfg) {
  Json j = config_to_json(cfg);
  j.erase("seed");
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

Json snapshot_to_json(const Snapshot& s) {
  const auto& in = s.inputs;
  Json sats = Json::array();
  for (const auto& m : in.gps)
    sats.push_back({{"id", m.sat.id},
                    {"position", vec(m.sat.position)},
                    {"clock_correction", m.sat.clock_correction},
                    {"elevation_deg", m.sat.elevation_deg},
                    {"azimuth_deg", m.sat.azimuth_deg},
                    {"pseudorange", m.pseudorange}});
  Json lms = Json::array();
  for (const auto& m : in.vision)
    lms.push_back({{"id", m.landmark.id},
                   {"position_set", set_to_json(m.landmark.position_set)},
                   {"pixel", vec(m.landmark.source_pixel)},
                   {"surface", m.landmark.surface},
                   {"intensity", m.intensity}});
  Json pixels = Json::array();
  for (const auto& u : in.keyframe.key_pixels) pixels.push_back(vec(u));
  Json j = {
      {"epoch", s.epoch},
      {"a_priori", state_to_json(in.a_priori)},
      {"motion_mean", state_to_json(in.motion_mean)},
      {"satellites", sats},
      {"landmarks", lms},
      {"keyframe",
       {{"state", state_to_json(in.keyframe.state)},
        {"key_pixels", pixels},
        {"inverse_depths", in.keyframe.inverse_depths},
        {"intensities", in.keyframe.intensities}}},
      {"camera", camera_to_json(in.intrinsics)},
  };
  if (in.image) j["image"] = {{"pose", state_to_json(in.image->pose())}, {"field", field_to_json(in.image->field())}};
  if (s.has_bounds) {
    Json b = {{"gps", set_to_json(s.bounds.gps)},
              {"vision", set_to_json(s.bounds.vision)},
              {"motion", set_to_json(s.bounds.motion)}};
    Json go = Json::object(), vo = Json::object();
    for (const auto& [id, p] : s.bounds.gps_overrides) go[id] = set_to_json(p);
    for (const auto& [id, p] : s.bounds.vision_overrides) vo[id] = set_to_json(p);
    if (!go.empty()) b["gps_overrides"] = go;
    if (!vo.empty()) b["vision_overrides"] = vo;
    j["noise_bounds"] = b;
  }
  if (!s.gps_history.empty() || !s.vision_history.empty())
    j["history"] = {{"gps", history_to_json(s.gps_history)}, {"vision", history_to_json(s.vision_history)}};
  return j;
}

Snapshot snapshot_from_json(const Json& j) {
  Snapshot s;
  auto& in = s.inputs;
  Obj o(j, "snapshot");
  s.epoch = integer(o.need("epoch"), o.at("epoch"));
  in.a_priori = state_from_json(o.need("a_priori"), o.at("a_priori"));
  in.motion_mean = state_from_json(o.need("motion_mean"), o.at("motion_mean"));

  const std::string sp = o.at("satellites");
  const Json& sats = array(o.need("satellites"), sp);
  for (std::size_t i = 0; i < sats.size(); ++i) {
    Obj so(sats[i], sp + "[" + std::to_string(i) + "]");
    GpsMeasurement m;
    m.sat.id = text(so.need("id"), so.at("id"));
    m.sat.position = vector_of(so.need("position"), so.at("position"), 3);
    m.sat.clock_correction = number(so.need("clock_correction"), so.at("clock_correction"));
    so.num("elevation_deg", m.sat.elevation_deg);
    so.num("azimuth_deg", m.sat.azimuth_deg);
    m.pseudorange = number(so.need("pseudorange"), so.at("pseudorange"));
    so.done();
    in.gps.push_back(m);
  }

  const std::string lp = o.at("landmarks");
  if (const Json* lms = o.find("landmarks")) {
    array(*lms, lp);
    for (std::size_t i = 0; i < lms->size(); ++i) {
      const std::string p = lp + "[" + std::to_string(i) + "]";
      Obj lo((*lms)[i], p);
      VisionMeasurement m;
      m.landmark.id = text(lo.need("id"), lo.at("id"));
      m.landmark.position_set = set_from_json(lo.need("position_set"), lo.at("position_set"));
      if (m.landmark.position_set.dim() != 3) fail(lo.at("position_set"), "must be 3-dimensional");
      m.landmark.position = m.landmark.position_set.center;
      m.landmark.source_pixel = vector_of(lo.need("pixel"), lo.at("pixel"), 2);
      lo.num("surface", m.landmark.surface);
      m.intensity = number(lo.need("intensity"), lo.at("intensity"));
      lo.done();
      in.vision.push_back(m);
    }
  }

  if (const Json* kf = o.find("keyframe")) {
    Obj ko(*kf, o.at("keyframe"));
    in.keyframe.state = state_from_json(ko.need("state"), ko.at("state"));
    const Json& px = array(ko.need("key_pixels"), ko.at("key_pixels"));
    for (std::size_t i = 0; i < px.size(); ++i)
      in.keyframe.key_pixels.push_back(vector_of(px[i], ko.at("key_pixels") + "[" + std::to_string(i) + "]", 2));
    const VectorXd d = vector_of(ko.need("inverse_depths"), ko.at("inverse_depths"));
    const VectorXd a = vector_of(ko.need("intensities"), ko.at("intensities"));
    in.keyframe.inverse_depths.assign(d.data(), d.data() + d.size());
    in.keyframe.intensities.assign(a.data(), a.data() + a.size());
    ko.done();
  } else if (!in.vision.empty()) {
    fail(o.at("keyframe"), "missing (required with landmarks)");
  }
  if (const Json* cam = o.find("camera")) camera_from(Obj(*cam, o.at("camera")), in.intrinsics);
  if (const Json* img = o.find("image")) {
    Obj io(*img, o.at("image"));
    const NavState pose = state_from_json(io.need("pose"), io.at("pose"));
    auto field = std::make_shared<IntensityField>(field_from_json(io.need("field"), io.at("field")));
    io.done();
    in.image.emplace(field, pose, in.intrinsics);
  } else if (!in.vision.empty()) {
    fail(o.at("image"), "missing (required with landmarks)");
  }

  if (const Json* nb = o.find("noise_bounds")) {
    Obj bo(*nb, o.at("noise_bounds"));
    s.bounds.gps = set_from_json(bo.need("gps"), bo.at("gps"));
    s.bounds.vision = set_from_json(bo.need("vision"), bo.at("vision"));
    s.bounds.motion = set_from_json(bo.need("motion"), bo.at("motion"));
    if (const Json* g = bo.find("gps_overrides")) s.bounds.gps_overrides = overrides_from_json(*g, bo.at("gps_overrides"));
    if (const Json* v = bo.find("vision_overrides"))
      s.bounds.vision_overrides = overrides_from_json(*v, bo.at("vision_overrides"));
    bo.done();
    try {
      s.bounds.validate();
    } catch (const Error& e) {
      fail(o.at("noise_bounds"), e.what());
    }
    s.has_bounds = true;
  }
  if (const Json* h = o.find("history")) {
    Obj ho(*h, o.at("history"));
    if (const Json* g = ho.find("gps")) s.gps_history = history_from_json(*g, ho.at("gps"));
    if (const Json* v = ho.find("vision")) s.vision_history = history_from_json(*v, ho.at("vision"));
    ho.done();
  }
  o.done();
  try {
    in.validate();
  } catch (const Error& e) {
    fail("snapshot", e.what());
  }
  return s;
}

Snapshot make_snapshot(const Scenario& sc, int epoch, const std::string& plant_id, double plant_bias_m) {
  require(epoch >= 1 && epoch < static_cast<int>(sc.truth.size()), "snapshot: epoch out of range");
  Snapshot s;
  s.epoch = epoch;
  s.inputs = sample_measurements(sc, epoch, sc.truth[static_cast<std::size_t>(epoch - 1)], sc.initial_landmarks);
  s.bounds = sc.config.noise_bounds();
  s.has_bounds = true;
  if (!plant_id.empty()) {
    bool found = false;
    for (auto& m : s.inputs.gps)
      if (m.sat.id == plant_id) {
        m.pseudorange += plant_bias_m;
        found = true;
      }
    require(found, "snapshot: satellite " + plant_id + " is not visible at epoch " + std::to_string(epoch));
  }
  return s;
}

Json select_snapshot(const Snapshot& s, const ScenarioConfig& cfg) {
  ReachPipeline pipeline(s.has_bounds ? s.bounds : cfg.noise_bounds(), cfg.selection.window);
  for (const auto& [id, h] : s.gps_history) pipeline.set_history(id, true, h);
  for (const auto& [id, h] : s.vision_history) pipeline.set_history(id, false, h);
  const EpochReach reach = pipeline.process(s.inputs);
  const SelectionResult r = select_landmarks(SelectionProblem::from_reach(reach), cfg.selection_config());
  std::vector<std::string> gids, vids;
  for (const auto& m : s.inputs.gps) gids.push_back(m.sat.id);
  for (const auto& m : s.inputs.vision) vids.push_back(m.landmark.id);
  return selection_to_json(s.epoch, gids, vids, r);
}

Json selection_to_json(int epoch, const std::vector<std::string>& gps_ids, const std::vector<std::string>& vision_ids,
                       const SelectionResult& r) {
  return {{"epoch", epoch},
          {"q_gps", q_object(gps_ids, r.rounded.gps)},
          {"q_vis", q_object(vision_ids, r.rounded.vision)},
          {"predicted_bound_m", finite_or_null(r.predicted_bound)},
          {"available", r.available},
          {"objective", finite_or_null(r.objective)}};
}

std::string epochs_csv(const std::vector<EpochRecord>& records) {
  std::string out =
      "epoch,t_s,err_3d_m,err_2d_m,predicted_bound_m,available,n_gps_selected,n_vis_selected,mean_alpha_gps,"
      "mean_alpha_vis\n";
  for (const auto& r : records) {
    out += std::to_string(r.epoch) + "," + fixed(r.t_s, 3) + "," + fixed(r.err_3d_m, 6) + "," + fixed(r.err_2d_m, 6) +
           "," + fixed(r.predicted_bound_m, 6) + "," + (r.available ? "1" : "0") + "," +
           std::to_string(r.n_gps_selected) + "," + std::to_string(r.n_vis_selected) + "," +
           fixed(r.mean_alpha_gps, 6) + "," + fixed(r.mean_alpha_vis, 6) + "\n";
  }
  return out;
}

std::string selection_jsonl(const std::vector<EpochRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    SelectionResult res;
    res.rounded = r.selection;
    res.predicted_bound = r.predicted_bound_m;
    res.available = r.available;
    res.objective = r.objective;
    Json j = selection_to_json(r.epoch, r.gps_seen, r.vision_seen, res);
    if (!r.failure.empty()) j["failure"] = r.failure;
    out += j.dump() + "\n";
  }
  return out;
}

Json summary_to_json(const RunSummary& s) {
  return {{"max_err_3d_m", s.max_err_3d_m},
          {"max_err_2d_m", s.max_err_2d_m},
          {"availability_fraction", s.availability_fraction},
          {"epochs", s.epochs},
          {"seed", s.seed},
          {"config_digest", s.config_digest}};
}

Json aggregate_to_json(const std::vector<RunSummary>& runs) {
  require(!runs.empty(), "aggregate: no runs");
  Json seeds = Json::array();
  double m3 = 0.0, m2 = 0.0, av = 0.0, x3 = 0.0, x2 = 0.0, xa = 0.0;
  for (const auto& r : runs) {
    seeds.push_back(r.seed);
    m3 += r.max_err_3d_m;
    m2 += r.max_err_2d_m;
    av += r.availability_fraction;
    x3 = std::max(x3, r.max_err_3d_m);
    x2 = std::max(x2, r.max_err_2d_m);
    xa = std::max(xa, r.availability_fraction);
  }
  const double n = static_cast<double>(runs.size());
  return {{"runs", runs.size()},
          {"seeds", seeds},
          {"config_digest", runs.front().config_digest},
          {"mean", {{"max_err_3d_m", m3 / n}, {"max_err_2d_m", m2 / n}, {"availability_fraction", av / n}}},
          {"max", {{"max_err_3d_m", x3}, {"max_err_2d_m", x2}, {"availability_fraction", xa}}}};
}

std::string baselines_csv(const std::vector<BaselineRow>& rows) {
  std::string out = "baseline,max_err_3d_m,max_err_2d_m,availability_fraction\n";
  for (const auto& r : rows)
    out += r.name + "," + fixed(r.max_err_3d_m, 6) + "," + fixed(r.max_err_2d_m, 6) + "," +
           fixed(r.availability_fraction, 6) + "\n";
  return out;
}

std::string dump(const Json& j, int indent) { return j.dump(indent) + "\n"; }

}  // namespace ila::io
