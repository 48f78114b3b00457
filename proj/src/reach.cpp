#include "ila/reach.hpp"

#include "ila/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ila {

const PZonotope& NoiseBounds::gps_for(const std::string& id) const {
  auto it = gps_overrides.find(id);
  return it == gps_overrides.end() ? gps : it->second;
}

const PZonotope& NoiseBounds::vision_for(const std::string& id) const {
  auto it = vision_overrides.find(id);
  return it == vision_overrides.end() ? vision : it->second;
}

void NoiseBounds::validate() const {
  require(gps.dim() == 1, "noise bounds: gps set must be 1-D");
  require(vision.dim() == 1, "noise bounds: vision set must be 1-D");
  require(motion.dim() == kStateDim, "noise bounds: motion set must be 7-D");
  for (const auto& [id, p] : gps_overrides) require(p.dim() == 1, "noise bounds: gps override " + id + " must be 1-D");
  for (const auto& [id, p] : vision_overrides)
    require(p.dim() == 1, "noise bounds: vision override " + id + " must be 1-D");
}

void EpochInputs::validate() const {
  intrinsics.validate();
  keyframe.validate();
  for (const auto& g : gps) require(std::isfinite(g.pseudorange), "epoch: non-finite pseudorange for " + g.sat.id);
  for (const auto& v : vision) {
    require(std::isfinite(v.intensity), "epoch: non-finite intensity for " + v.landmark.id);
    require(v.landmark.position_set.dim() == 3, "epoch: landmark set of " + v.landmark.id + " must be 3-D");
  }
  require(vision.empty() || image.has_value(), "epoch: vision landmarks given without a camera image");
}

GpsLinearization linearize_gps(const EpochInputs& in, std::size_t i) {
  require(i < in.gps.size(), "linearize_gps: index out of range");
  const auto& m = in.gps[i];
  return {gps_jacobian(in.a_priori, m.sat), m.pseudorange - gps_predict(in.a_priori, m.sat)};
}

VisionLinearization linearize_vision(const EpochInputs& in, std::size_t j) {
  require(j < in.vision.size(), "linearize_vision: index out of range");
  require(in.image.has_value(), "linearize_vision: missing camera image");
  const auto& m = in.vision[j];
  const auto jac = vision_jacobians(in.a_priori, m.landmark, in.keyframe, in.intrinsics, *in.image);
  const double pred = vision_predict(in.a_priori, m.landmark, in.keyframe, in.intrinsics, *in.image);
  return {jac.state, jac.landmark, m.intensity - pred};
}

VectorXd row_pinv(const Eigen::RowVectorXd& row) {
  const double n2 = row.squaredNorm();
  require(n2 > 1e-24, "pseudoinverse of a zero row", ErrorCode::kDegenerate);
  return row.transpose() / n2;
}

namespace {

VectorXd motion_offset(const EpochInputs& in) { return in.motion_mean - in.a_priori; }

PZonotope landmark_deviation(const VisionLandmark& lm) { return translate(-lm.position, lm.position_set); }

}  // namespace

PZonotope expected_state_motion(const EpochInputs& in, const NoiseBounds& bounds) {
  return translate(motion_offset(in), bounds.motion);
}

PZonotope expected_state_gps(const EpochInputs& in, const NoiseBounds& bounds, std::size_t i) {
  const auto lin = linearize_gps(in, i);
  const PZonotope meas = translate(VectorXd::Constant(1, lin.dz), bounds.gps_for(in.gps[i].sat.id));
  return linear_map(row_pinv(lin.h), meas);
}

PZonotope expected_state_vision(const EpochInputs& in, const NoiseBounds& bounds, std::size_t j) {
  const auto lin = linearize_vision(in, j);
  const auto& lm = in.vision[j].landmark;
  const PZonotope meas = translate(VectorXd::Constant(1, lin.dz), bounds.vision_for(lm.id));
  const PZonotope inner = minkowski_sum(linear_map(lin.bp, landmark_deviation(lm)), meas);
  return linear_map(row_pinv(lin.bx), inner);
}

Innovation innovation_gps(const EpochInputs& in, const NoiseBounds& bounds, std::size_t i) {
  const auto lin = linearize_gps(in, i);
  Innovation out;
  out.value = lin.dz - lin.h.dot(motion_offset(in));
  out.expected = minkowski_sum(linear_map(lin.h, bounds.motion), bounds.gps_for(in.gps[i].sat.id));
  return out;
}

Innovation innovation_vision(const EpochInputs& in, const NoiseBounds& bounds, std::size_t j) {
  const auto lin = linearize_vision(in, j);
  const auto& lm = in.vision[j].landmark;
  Innovation out;
  out.value = lin.dz - lin.bx.dot(motion_offset(in));
  out.expected = minkowski_sum(minkowski_sum(linear_map(lin.bx, bounds.motion), linear_map(lin.bp, landmark_deviation(lm))),
                               bounds.vision_for(lm.id));
  return out;
}

double joint_fault_status(std::span<const double> history, int window) {
  require(window >= 1, "joint fault status: window must be at least 1");
  require(!history.empty(), "joint fault status: empty history");
  const std::size_t k = std::min(history.size(), static_cast<std::size_t>(window));
  double s = 0.0;
  for (std::size_t i = history.size() - k; i < history.size(); ++i) s += history[i];
  return std::min(s / static_cast<double>(k), kAlphaCap);
}

namespace {

double member_scale(double q, double alpha) {
  require(q >= 0.0 && q <= 1.0 + 1e-9, "scaled union: weight outside [0, 1]");
  require(alpha >= 0.0 && alpha < 1.0, "scaled union: fault status outside [0, 1)");
  return q / (1.0 - alpha);
}

}  // namespace

PZonotope scaled_union(const PZonotope& motion, std::span<const Member> gps, std::span<const Member> vision,
                       std::span<const double> q_gps, std::span<const double> q_vis) {
  require(gps.size() == q_gps.size() && vision.size() == q_vis.size(), "scaled union: weight count mismatch");
  std::vector<PZonotope> parts{motion};
  auto add = [&](std::span<const Member> ms, std::span<const double> qs) {
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (qs[i] <= kWeightFloor) continue;
      parts.push_back(scale(member_scale(qs[i], ms[i].alpha), ms[i].set));
    }
  };
  add(gps, q_gps);
  add(vision, q_vis);
  return enclose_union(parts);
}

double pzono_cost(const PZonotope& union_set, double gamma, const WeightVector& w) {
  return zonotope_size(confidence_cut(union_set, gamma), w);
}

std::vector<Member> EpochReach::gps_members() const {
  std::vector<Member> out;
  for (const auto& l : gps) out.push_back({l.expected_state, l.joint_status});
  return out;
}

std::vector<Member> EpochReach::vision_members() const {
  std::vector<Member> out;
  for (const auto& l : vision) out.push_back({l.expected_state, l.joint_status});
  return out;
}

ReachPipeline::ReachPipeline(NoiseBounds bounds, int window) : bounds_(std::move(bounds)), window_(window) {
  bounds_.validate();
  require(window_ >= 1, "reach: window must be at least 1");
}

double ReachPipeline::push(std::map<std::string, std::deque<double>>& hist, const std::string& id, double status) {
  auto& h = hist[id];
  h.push_back(status);
  while (h.size() > static_cast<std::size_t>(window_)) h.pop_front();
  const std::vector<double> v(h.begin(), h.end());
  return joint_fault_status(v, window_);
}

void ReachPipeline::set_history(const std::string& id, bool is_gps, std::span<const double> statuses) {
  auto& h = (is_gps ? gps_history_ : vision_history_)[id];
  h.clear();
  for (double s : statuses) {
    require(s >= 0.0 && s <= 1.0, "reach: recorded status outside [0, 1] for " + id);
    h.push_back(s);
  }
  while (h.size() > static_cast<std::size_t>(window_)) h.pop_front();
}

EpochReach ReachPipeline::process(const EpochInputs& in) {
  in.validate();
  EpochReach out;
  out.motion = expected_state_motion(in, bounds_);

  for (std::size_t i = 0; i < in.gps.size(); ++i) {
    LandmarkReach r;
    r.id = in.gps[i].sat.id;
    r.expected_state = expected_state_gps(in, bounds_, i);
    const auto inn = innovation_gps(in, bounds_, i);
    r.innovation = inn.value;
    r.status = inn.status();
    r.joint_status = push(gps_history_, r.id, r.status);
    out.gps.push_back(std::move(r));
  }

  for (std::size_t j = 0; j < in.vision.size(); ++j) {
    LandmarkReach r;
    r.id = in.vision[j].landmark.id;
    try {
      r.expected_state = expected_state_vision(in, bounds_, j);
      const auto inn = innovation_vision(in, bounds_, j);
      r.innovation = inn.value;
      r.status = inn.status();
      r.joint_status = push(vision_history_, r.id, r.status);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerate && e.code() != ErrorCode::kBehindCamera) throw;
      r.informative = false;
      r.expected_state = PZonotope::point(VectorXd::Zero(kStateDim));
    }
    out.vision.push_back(std::move(r));
  }
  return out;
}

namespace {

// Per-axis interval radius and union covariance bound of one member.
void member_axes(const PZonotope& p, VectorXd& radius, VectorXd& var_bound) {
  radius = p.order() ? VectorXd(p.generators.cwiseAbs().rowwise().sum()) : VectorXd::Zero(p.dim());
  const VectorXd gersh = p.covariance.cwiseAbs().rowwise().sum();
  const VectorXd root_l1 = symmetric_sqrt(p.covariance).cwiseAbs().rowwise().sum();
  var_bound = gersh.cwiseMax(root_l1.cwiseAbs2());
}

// Smallest and second smallest value on one axis, with the owner of the first.
struct TwoBest {
  double first = std::numeric_limits<double>::infinity();
  double second = std::numeric_limits<double>::infinity();
  std::ptrdiff_t owner = -2;

  void offer(double v, std::ptrdiff_t who) {
    if (v < first) {
      second = first;
      first = v;
      owner = who;
    } else if (v < second) {
      second = v;
    }
  }
  double without(std::ptrdiff_t who) const { return owner == who ? second : first; }
};

}  // namespace

UnionCost::UnionCost(const PZonotope& motion, std::span<const Member> gps, std::span<const Member> vision,
                     double gamma, const WeightVector& w)
    : n_gps_(gps.size()), m2_(std::pow(cut_multiplier(gamma), 2)), w_(w.values()) {
  require(w_.size() == motion.dim(), "union cost: weight dimension mismatch");
  const auto n = motion.dim();
  VectorXd r, d;
  member_axes(motion, r, d);
  motion_lo_ = motion.center - r;
  motion_hi_ = motion.center + r;
  motion_var_ = d;
  const auto count = static_cast<Eigen::Index>(gps.size() + vision.size());
  centers_.resize(n, count);
  radii_.resize(n, count);
  var_bounds_.resize(n, count);
  Eigen::Index k = 0;
  auto add = [&](std::span<const Member> ms) {
    for (const auto& m : ms) {
      require(m.set.dim() == n, "union cost: member dimension mismatch");
      require(m.alpha >= 0.0 && m.alpha < 1.0, "union cost: fault status outside [0, 1)");
      member_axes(m.set, r, d);
      centers_.col(k) = m.set.center;
      radii_.col(k) = r;
      var_bounds_.col(k) = d;
      inv_one_minus_alpha_.push_back(1.0 / (1.0 - m.alpha));
      ++k;
    }
  };
  add(gps);
  add(vision);
}

double UnionCost::operator()(std::span<const double> q) const {
  require(q.size() == size(), "union cost: weight count mismatch");
  double total = 0.0;
  for (Eigen::Index a = 0; a < centers_.rows(); ++a) {
    double lo = motion_lo_(a), hi = motion_hi_(a), d = motion_var_(a);
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i] <= kWeightFloor) continue;
      const auto c = static_cast<Eigen::Index>(i);
      const double s = q[i] * inv_one_minus_alpha_[i];
      lo = std::min(lo, s * (centers_(a, c) - radii_(a, c)));
      hi = std::max(hi, s * (centers_(a, c) + radii_(a, c)));
      d = std::max(d, s * s * var_bounds_(a, c));
    }
    const double half = 0.5 * (hi - lo);
    total += w_(a) * (half * half + m2_ * d);
  }
  return total;
}

double UnionCost::forward_gradient(std::span<const double> q, double h, std::span<double> grad) const {
  require(q.size() == size() && grad.size() == size(), "union cost: weight count mismatch");
  require(h > 0.0, "union cost: step must be positive");
  std::fill(grad.begin(), grad.end(), 0.0);
  double base = 0.0;
  for (Eigen::Index a = 0; a < centers_.rows(); ++a) {
    if (w_(a) == 0.0) continue;
    // Minima of lo, -hi and -d over the motion set (-1) and included members.
    TwoBest lo, nhi, nd;
    lo.offer(motion_lo_(a), -1);
    nhi.offer(-motion_hi_(a), -1);
    nd.offer(-motion_var_(a), -1);
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i] <= kWeightFloor) continue;
      const auto c = static_cast<Eigen::Index>(i);
      const auto who = static_cast<std::ptrdiff_t>(i);
      const double s = q[i] * inv_one_minus_alpha_[i];
      lo.offer(s * (centers_(a, c) - radii_(a, c)), who);
      nhi.offer(-s * (centers_(a, c) + radii_(a, c)), who);
      nd.offer(-s * s * var_bounds_(a, c), who);
    }
    const double half0 = 0.5 * (-nhi.first - lo.first);
    const double axis0 = half0 * half0 + m2_ * -nd.first;
    base += w_(a) * axis0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double qi = q[i] + h;
      if (qi <= kWeightFloor) continue;
      const auto c = static_cast<Eigen::Index>(i);
      const auto who = static_cast<std::ptrdiff_t>(i);
      const double s = qi * inv_one_minus_alpha_[i];
      const double l = std::min(lo.without(who), s * (centers_(a, c) - radii_(a, c)));
      const double u = std::max(-nhi.without(who), s * (centers_(a, c) + radii_(a, c)));
      const double d = std::max(-nd.without(who), s * s * var_bounds_(a, c));
      const double half = 0.5 * (u - l);
      grad[i] += w_(a) * (half * half + m2_ * d - axis0) / h;
    }
  }
  return base;
}

}  // namespace ila
