#pragma once

#include <Eigen/Dense>
#include <vector>

#include "asaprl/core/types.hpp"

namespace asaprl::skill {

inline constexpr int kArcSamples = 512;   // arc-length table resolution
inline constexpr double kXEndFloor = 2.0; // minimum path extent (m)

/// Cubic lateral profile y(x) = c2 x^2 + c3 x^3 on [0, x_end] in the frame of
/// the initiating state, with a sampled arc-length table for s <-> x lookups.
struct Path {
  double c2 = 0.0;
  double c3 = 0.0;
  double x_end = 0.0;
  Eigen::VectorXd xs;  // uniform abscissae, size n+1
  Eigen::VectorXd ss;  // cumulative arc length at xs, strictly increasing

  double y(double x) const { return (c2 + c3 * x) * x * x; }
  double dy(double x) const { return (2.0 * c2 + 3.0 * c3 * x) * x; }
  double d2y(double x) const { return 2.0 * c2 + 6.0 * c3 * x; }
  double curvature(double x) const {
    double t = dy(x);
    return d2y(x) / std::pow(1.0 + t * t, 1.5);
  }
  double length() const { return ss(ss.size() - 1); }
  /// Inverse lookup via the table (linear interpolation). s must be within
  /// [0, length()] up to a small slack.
  double x_at_arc_length(double s) const;
};

/// Cubic speed profile v(t) on [0, duration] with Hermite boundary
/// conditions; evaluation clamps negative speeds to zero, the travelled
/// distance integral is exact piecewise (split at the zeros of v).
struct SpeedProfile {
  double v0 = 0.0;
  double a0 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double duration = 0.0;
  std::vector<double> zeros;  // sign-change roots of v in (0, duration)

  double v_raw(double t) const { return v0 + (a0 + (c2 + c3 * t) * t) * t; }
  double v(double t) const { return std::max(v_raw(t), 0.0); }
  double dv(double t) const { return a0 + (2.0 * c2 + 3.0 * c3 * t) * t; }
  /// Integral of max(v, 0) over [0, t].
  double distance(double t) const;
};

/// T+1 vehicle states covering one skill: states[0] is the initiating state
/// (t = 0), states[k] is the pose after k simulation steps of dt seconds.
struct Trajectory {
  std::vector<VehicleState> states;
  double dt = 0.0;
  int horizon() const { return static_cast<int>(states.size()) - 1; }
  const VehicleState& start() const { return states.front(); }
  const VehicleState& last() const { return states.back(); }
};

/// Longest distance reachable within t_sec under full throttle, capped at
/// v_max, floored at kXEndFloor so a stopped vehicle keeps a usable path.
double max_reach_distance(const VehicleState& state, const SkillBounds& bounds, double t_sec);

/// Upper bound on the travelled distance of any in-bounds speed profile
/// started from `state` (the cubic may transiently exceed the kinematic
/// envelope, so this can be larger than max_reach_distance).
double profile_reach_bound(const VehicleState& state, const SkillBounds& bounds, double t_sec);

/// Path extent used by skill generation: max of the two bounds above, which
/// guarantees speed-to-path projection never runs off the path.
double skill_path_extent(const VehicleState& state, const SkillBounds& bounds, double t_sec);

/// Cubic Hermite path with y(0)=0, y'(0)=0, y(x_end)=y_e, y'(x_end)=tan(phi_e).
/// Throws std::invalid_argument for x_end <= 0.
Path generate_path(double y_e, double phi_e, double x_end, int n_arc = kArcSamples);

SpeedProfile generate_speed_profile(double v0, double a0, double v_e, double a_e, double t_sec);

/// Forward skill generation f_s: project the speed-profile integral onto the
/// path and transform into the world frame of `state`. Throws std::logic_error
/// if the required arc length exceeds the path length (cannot happen for
/// in-bounds parameters with the default path extent).
Trajectory generate_skill(const VehicleState& state, const SkillParams& theta,
                          const SkillBounds& bounds, int steps, double dt,
                          int n_arc = kArcSamples);

}  // namespace asaprl::skill
