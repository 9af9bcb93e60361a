#pragma once

#include <Eigen/Dense>
#include <vector>

#include "asaprl/core/types.hpp"
#include "asaprl/skill/geometry.hpp"

namespace asaprl::recovery {

/// Per-component weights of the state mismatch norm. Chosen so that one
/// lane-width position error, ~0.3 rad heading, 1.4 m/s speed and 3 m/s^2
/// acceleration contribute comparably.
struct RecoveryWeights {
  double w_xy = 1.0;
  double w_phi = 10.0;
  double w_v = 0.5;
  double w_a = 0.1;
};

struct RecoveryConfig {
  int n_starts = 8;
  int max_iters = 60;
  /// A start counts as converged when the weighted residual reaches this.
  double residual_tolerance = 1e-3;
  /// Stop iterating when the objective improves less than this (relative).
  double min_rel_decrease = 1e-12;
  double fd_step = 1e-7;
  RecoveryWeights weights;
  /// Records with residual above this are flagged (kept, but marked).
  double flag_cutoff = 0.5;
  uint64_t seed = 0x5eed5eedULL;
};

struct RecoveryResult {
  SkillParams theta_hat;
  double residual = 0.0;  // sqrt of the weighted squared-error objective
  int starts_tried = 0;
  bool converged = false;
};

/// One demonstration window: the state immediately preceding it plus the T
/// states it spans.
struct Segment {
  VehicleState start_state;
  std::vector<VehicleState> states;  // exactly T states, at dt..T*dt
};

/// Weighted residual vector of a candidate trajectory against a demonstrated
/// window (5 rows per step). Exposed so reported residuals can be recomputed
/// independently of the optimizer.
Eigen::VectorXd residual_vector(const std::vector<VehicleState>& demo,
                                const skill::Trajectory& candidate,
                                const RecoveryWeights& w);

double residual_norm(const std::vector<VehicleState>& demo, const VehicleState& start_state,
                     const SkillParams& theta, const SkillBounds& bounds,
                     const RecoveryWeights& w, double dt);

/// Inverse skill-parameter recovery: multi-start projected Levenberg-
/// Marquardt over the four parameters, hard-constrained to `bounds`.
RecoveryResult recover(const std::vector<VehicleState>& demo, const VehicleState& start_state,
                       const SkillBounds& bounds, const RecoveryConfig& cfg, double dt);

/// Split a long state trajectory into consecutive non-overlapping windows of
/// T states; segment k starts at index k*T, a short trailing remainder is
/// dropped. Yields floor((len-1)/T) segments.
std::vector<Segment> segment_demonstration(const std::vector<VehicleState>& traj, int T);

}  // namespace asaprl::recovery
