#include "ila/attention.hpp"

#include "ila/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ila {

double AttentionSet::total() const {
  return std::accumulate(gps.begin(), gps.end(), 0.0) + std::accumulate(vision.begin(), vision.end(), 0.0);
}

int AttentionSet::count_gps() const {
  return static_cast<int>(std::count_if(gps.begin(), gps.end(), [](double q) { return q >= 0.5; }));
}

int AttentionSet::count_vision() const {
  return static_cast<int>(std::count_if(vision.begin(), vision.end(), [](double q) { return q >= 0.5; }));
}

std::vector<double> AttentionSet::flat() const {
  std::vector<double> out(gps);
  out.insert(out.end(), vision.begin(), vision.end());
  return out;
}

void SelectionConfig::validate() const {
  require(n_min >= 1, "selection: n_min must be at least 1", ErrorCode::kConfig);
  require(l_min >= 0, "selection: l_min must be non-negative", ErrorCode::kConfig);
  require(beta > 0.0 && beta < 1.0, "selection: beta must lie in (0, 1)", ErrorCode::kConfig);
  require(gamma > 0.0 && gamma < 1.0, "selection: gamma must lie in (0, 1)", ErrorCode::kConfig);
  require(alert_limit > 0.0, "selection: alert limit must be positive", ErrorCode::kConfig);
  require(weights.size() == kStateDim, "selection: weights must have 7 entries", ErrorCode::kConfig);
}

SelectionProblem SelectionProblem::from_reach(const EpochReach& r) {
  SelectionProblem p;
  p.motion = r.motion;
  p.gps = r.gps_members();
  p.vision = r.vision_members();
  for (const auto& l : r.vision) p.vision_allowed.push_back(l.informative);
  return p;
}

int SelectionProblem::usable_vision() const {
  int n = 0;
  for (std::size_t j = 0; j < vision.size(); ++j) n += allowed_vision(j) ? 1 : 0;
  return n;
}

namespace {

UnionCost make_cost(const SelectionProblem& p, const SelectionConfig& cfg) {
  return UnionCost(p.motion, p.gps, p.vision, cfg.gamma, cfg.weights);
}

void check_feasible(const SelectionProblem& p, const SelectionConfig& cfg) {
  if (static_cast<int>(p.gps.size()) < cfg.n_min)
    throw Error(ErrorCode::kInfeasible, "selection: " + std::to_string(p.gps.size()) + " satellites < n_min " +
                                            std::to_string(cfg.n_min));
  if (p.usable_vision() < cfg.l_min)
    throw Error(ErrorCode::kInfeasible, "selection: " + std::to_string(p.usable_vision()) +
                                            " usable vision landmarks < l_min " + std::to_string(cfg.l_min));
}

double ratio(const UnionCost& cost, std::span<const double> q) {
  const double d = std::accumulate(q.begin(), q.end(), 0.0);
  require(d > 0.0, "objective: attention set is all zero");
  return cost(q) / d;
}

AttentionSet split(const std::vector<double>& flat, std::size_t n_gps, bool relaxed) {
  AttentionSet a;
  a.gps.assign(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(n_gps));
  a.vision.assign(flat.begin() + static_cast<std::ptrdiff_t>(n_gps), flat.end());
  a.relaxed = relaxed;
  return a;
}

}  // namespace

double objective(const SelectionProblem& p, const AttentionSet& q, const SelectionConfig& cfg) {
  require(q.gps.size() == p.gps.size() && q.vision.size() == p.vision.size(), "objective: weight count mismatch");
  const auto flat = q.flat();
  return ratio(make_cost(p, cfg), flat);
}

void project_group(std::span<double> q, std::span<const double> upper, double min_sum) {
  require(q.size() == upper.size(), "project: size mismatch");
  const double cap = std::accumulate(upper.begin(), upper.end(), 0.0);
  require(cap >= min_sum - 1e-12, "project: constraint set is empty", ErrorCode::kInfeasible);
  auto clipped_sum = [&](double tau) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += std::clamp(q[i] + tau, 0.0, upper[i]);
    return s;
  };
  double tau = 0.0;
  if (clipped_sum(0.0) < min_sum) {
    double lo = 0.0, hi = 1.0;
    while (clipped_sum(hi) < min_sum) hi *= 2.0;
    for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
      const double mid = 0.5 * (lo + hi);
      (clipped_sum(mid) < min_sum ? lo : hi) = mid;
    }
    tau = hi;
  }
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::clamp(q[i] + tau, 0.0, upper[i]);
}

AttentionSet solve_relaxed(const SelectionProblem& p, const SelectionConfig& cfg, const SolverOptions& opt) {
  cfg.validate();
  check_feasible(p, cfg);
  const UnionCost cost = make_cost(p, cfg);
  const std::size_t ng = p.gps.size();
  const std::size_t n = ng + p.vision.size();

  std::vector<double> upper(n, 1.0);
  for (std::size_t j = 0; j < p.vision.size(); ++j) upper[ng + j] = p.allowed_vision(j) ? 1.0 : 0.0;
  const std::span<const double> up(upper);

  auto project = [&](std::vector<double>& x) {
    std::span<double> xs(x);
    project_group(xs.first(ng), up.first(ng), cfg.n_min);
    project_group(xs.subspan(ng), up.subspan(ng), cfg.l_min);
  };

  std::vector<double> q = upper;
  project(q);
  double lambda = ratio(cost, q);
  std::vector<double> grad(n), x(n);

  for (int outer = 0; outer < opt.max_outer; ++outer) {
    auto inner_value = [&](const std::vector<double>& v) {
      return cost(v) - lambda * std::accumulate(v.begin(), v.end(), 0.0);
    };
    x = q;
    std::vector<double> best = q;
    double best_f = inner_value(q);
    for (int t = 0; t < opt.inner_iterations; ++t) {
      cost.forward_gradient(x, opt.fd_step, grad);
      double gnorm2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        grad[i] = upper[i] == 0.0 ? 0.0 : grad[i] - lambda;
        gnorm2 += grad[i] * grad[i];
      }
      if (!(gnorm2 > 0.0)) break;
      const double step = opt.step0 / std::sqrt(static_cast<double>(t) + 1.0) / std::sqrt(gnorm2);
      for (std::size_t i = 0; i < n; ++i) x[i] -= step * grad[i];
      project(x);
      const double f = inner_value(x);
      if (f < best_f) {
        best_f = f;
        best = x;
      }
    }
    q = best;
    const double next = ratio(cost, q);
    const bool done = std::abs(next - lambda) < opt.lambda_tol;
    lambda = next;
    if (done) break;
  }
  return split(q, ng, true);
}

AttentionSet round_attention(const AttentionSet& relaxed, const SelectionConfig& cfg,
                             const std::vector<bool>& vision_allowed) {
  cfg.validate();
  auto round_group = [&](const std::vector<double>& w, int min_count, auto allowed, const char* what) {
    std::vector<double> out(w.size(), 0.0);
    int count = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      require(w[i] >= -1e-9 && w[i] <= 1.0 + 1e-9, "round: relaxed weight outside [0, 1]");
      if (allowed(i) && w[i] >= cfg.beta) {
        out[i] = 1.0;
        ++count;
      }
    }
    if (count < min_count) {
      std::vector<std::size_t> order;
      for (std::size_t i = 0; i < w.size(); ++i)
        if (allowed(i) && out[i] == 0.0) order.push_back(i);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
      for (std::size_t k = 0; k < order.size() && count < min_count; ++k, ++count) out[order[k]] = 1.0;
    }
    if (count < min_count)
      throw Error(ErrorCode::kInfeasible, std::string("round: not enough ") + what + " landmarks to reach the minimum");
    return out;
  };
  AttentionSet r;
  r.relaxed = false;
  r.gps = round_group(relaxed.gps, cfg.n_min, [](std::size_t) { return true; }, "GPS");
  r.vision = round_group(
      relaxed.vision, cfg.l_min,
      [&](std::size_t j) { return vision_allowed.empty() || vision_allowed[j]; }, "vision");
  return r;
}

SelectionResult predict_availability(const SelectionProblem& p, const AttentionSet& rounded,
                                     const SelectionConfig& cfg) {
  cfg.validate();
  require(rounded.gps.size() == p.gps.size() && rounded.vision.size() == p.vision.size(),
          "predict: weight count mismatch");
  SelectionResult res;
  res.rounded = rounded;
  res.objective = objective(p, rounded, cfg);
  const PZonotope u = scaled_union(p.motion, p.gps, p.vision, rounded.gps, rounded.vision);
  res.predicted_bound = std::sqrt(pzono_cost(u, cfg.gamma, WeightVector::position_only(kStateDim)));
  res.available = res.predicted_bound <= cfg.alert_limit;
  return res;
}

SelectionResult select_landmarks(const SelectionProblem& p, const SelectionConfig& cfg, const SolverOptions& opt) {
  const AttentionSet relaxed = solve_relaxed(p, cfg, opt);
  SelectionResult res = predict_availability(p, round_attention(relaxed, cfg, p.vision_allowed), cfg);
  res.relaxed = relaxed;
  return res;
}

AttentionSet brute_force_oracle(const SelectionProblem& p, const SelectionConfig& cfg) {
  cfg.validate();
  const std::size_t ng = p.gps.size();
  const std::size_t n = ng + p.vision.size();
  if (n > kOracleMaxLandmarks)
    throw Error(ErrorCode::kTooLarge, "oracle: " + std::to_string(n) + " landmarks exceed the limit of " +
                                          std::to_string(kOracleMaxLandmarks));
  check_feasible(p, cfg);
  const UnionCost cost = make_cost(p, cfg);

  std::vector<double> q(n), best;
  double best_obj = 0.0;
  int best_count = -1;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    int cg = 0, cv = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const bool on = (mask >> (n - 1 - i)) & 1u;  // bit order makes mask order lexicographic
      q[i] = on ? 1.0 : 0.0;
      if (!on) continue;
      if (i < ng) {
        ++cg;
      } else if (!p.allowed_vision(i - ng)) {
        ok = false;
      } else {
        ++cv;
      }
    }
    if (!ok || cg < cfg.n_min || cv < cfg.l_min) continue;
    const double obj = ratio(cost, q);
    const int count = cg + cv;
    const double tol = 1e-12 * std::max(1.0, std::abs(best_obj));
    const bool better = best_count < 0 || obj < best_obj - tol ||
                        (std::abs(obj - best_obj) <= tol && count >= best_count);
    if (better) {
      best = q;
      best_obj = obj;
      best_count = count;
    }
  }
  return split(best, ng, false);
}

}  // namespace ila
