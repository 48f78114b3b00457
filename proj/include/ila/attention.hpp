#pragma once

// Landmark selection: the relaxed fractional problem, rounding with count
// repair, predicted position bound and availability, and an exhaustive
// oracle for small instances.

#include "ila/reach.hpp"

#include <vector>

namespace ila {

struct AttentionSet {
  std::vector<double> gps;
  std::vector<double> vision;
  bool relaxed = true;

  double total() const;
  int count_gps() const;     // entries >= 0.5
  int count_vision() const;  // entries >= 0.5
  std::vector<double> flat() const;
};

struct SelectionConfig {
  int n_min = 5;
  int l_min = 0;
  double beta = 0.75;
  double gamma = 0.999;
  double alert_limit = 7.5;  // m
  WeightVector weights = WeightVector::position_only(kStateDim);

  void validate() const;
};

struct SelectionResult {
  AttentionSet rounded;
  AttentionSet relaxed;
  double predicted_bound = 0.0;  // m
  bool available = false;
  double objective = 0.0;
};

/// One epoch's selection instance. Vision members flagged as not allowed
/// (uninformative) are pinned to zero and do not count toward l_min.
struct SelectionProblem {
  PZonotope motion = PZonotope::point(VectorXd::Zero(kStateDim));
  std::vector<Member> gps;
  std::vector<Member> vision;
  std::vector<bool> vision_allowed;  // empty: all allowed

  static SelectionProblem from_reach(const EpochReach& r);
  bool allowed_vision(std::size_t j) const { return vision_allowed.empty() || vision_allowed[j]; }
  int usable_vision() const;
};

/// pzono_cost of the scaled union over the total weight. Throws on all-zero q.
double objective(const SelectionProblem& p, const AttentionSet& q, const SelectionConfig& cfg);

struct SolverOptions {
  int max_outer = 50;
  double lambda_tol = 1e-4;
  int inner_iterations = 150;
  double fd_step = 1e-3;
  double step0 = 0.5;
};

AttentionSet solve_relaxed(const SelectionProblem& p, const SelectionConfig& cfg, const SolverOptions& opt = {});

AttentionSet round_attention(const AttentionSet& relaxed, const SelectionConfig& cfg,
                             const std::vector<bool>& vision_allowed = {});

SelectionResult predict_availability(const SelectionProblem& p, const AttentionSet& rounded,
                                     const SelectionConfig& cfg);

/// solve_relaxed -> round_attention -> predict_availability.
SelectionResult select_landmarks(const SelectionProblem& p, const SelectionConfig& cfg, const SolverOptions& opt = {});

inline constexpr std::size_t kOracleMaxLandmarks = 20;

/// Exact minimizer over feasible binary sets; ties go to the larger count,
/// then to the lexicographically greater (gps..., vision...) vector.
AttentionSet brute_force_oracle(const SelectionProblem& p, const SelectionConfig& cfg);

/// In-place Euclidean projection onto { 0 <= q_i <= upper_i, sum q >= min_sum }.
void project_group(std::span<double> q, std::span<const double> upper, double min_sum);

}  // namespace ila
