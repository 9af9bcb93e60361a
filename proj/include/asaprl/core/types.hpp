#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace asaprl {

/// Wrap an angle into (-pi, pi]. Values already in range pass through exactly.
inline double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  if (a > -pi && a <= pi) return a;
  a = std::fmod(a + pi, 2.0 * pi);
  if (a <= 0.0) a += 2.0 * pi;
  return a - pi;
}

inline double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

/// Planar vehicle state: position (m), heading (rad), speed (m/s, >= 0),
/// longitudinal acceleration (m/s^2). World or ego frame depending on context.
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;
  double v = 0.0;
  double a = 0.0;
};

/// End-boundary parameters of one motion skill: lateral offset, heading,
/// speed and acceleration at the end of the skill, in the frame of the
/// initiating state.
struct SkillParams {
  double y_e = 0.0;
  double phi_e = 0.0;
  double v_e = 0.0;
  double a_e = 0.0;

  double operator[](int i) const {
    switch (i) {
      case 0: return y_e;
      case 1: return phi_e;
      case 2: return v_e;
      default: return a_e;
    }
  }
  double& operator[](int i) {
    switch (i) {
      case 0: return y_e;
      case 1: return phi_e;
      case 2: return v_e;
      default: return a_e;
    }
  }
};

/// Admissible ranges for skill parameters plus the empirical curvature limit.
struct SkillBounds {
  double y_max = 4.0;
  double phi_max = 0.5;
  double v_max = 12.0;
  double a_min = -6.0;
  double a_max = 3.0;
  double kappa_max = 0.3;

  SkillParams clamp_params(const SkillParams& p) const {
    return SkillParams{clamp(p.y_e, -y_max, y_max), clamp(p.phi_e, -phi_max, phi_max),
                       clamp(p.v_e, 0.0, v_max), clamp(p.a_e, a_min, a_max)};
  }

  bool contains(const SkillParams& p, double tol = 0.0) const {
    return std::abs(p.y_e) <= y_max + tol && std::abs(p.phi_e) <= phi_max + tol &&
           p.v_e >= -tol && p.v_e <= v_max + tol && p.a_e >= a_min - tol && p.a_e <= a_max + tol;
  }

  double low(int i) const {
    switch (i) {
      case 0: return -y_max;
      case 1: return -phi_max;
      case 2: return 0.0;
      default: return a_min;
    }
  }
  double high(int i) const {
    switch (i) {
      case 0: return y_max;
      case 1: return phi_max;
      case 2: return v_max;
      default: return a_max;
    }
  }
};

}  // namespace asaprl
