#include "asaprl/skill/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asaprl::skill {

namespace {

// 4-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGlNode[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                               0.8611363115940526};
constexpr double kGlWeight[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                 0.3478548451374538};

double arc_integrand(const Path& p, double x) {
  double t = p.dy(x);
  return std::sqrt(1.0 + t * t);
}

}  // namespace

double Path::x_at_arc_length(double s) const {
  const double total = length();
  if (s < -1e-9 || s > total + 1e-6) throw std::logic_error("arc length outside path");
  s = clamp(s, 0.0, total);
  const double* begin = ss.data();
  const double* end = ss.data() + ss.size();
  const double* it = std::upper_bound(begin, end, s);
  if (it == begin) return xs(0);
  if (it == end) return xs(xs.size() - 1);
  long i = it - begin;  // ss[i-1] <= s < ss[i]
  double t = (s - ss(i - 1)) / (ss(i) - ss(i - 1));
  return xs(i - 1) + t * (xs(i) - xs(i - 1));
}

double SpeedProfile::distance(double t) const {
  t = clamp(t, 0.0, duration);
  auto antideriv = [&](double u) {
    return (((c3 * u / 4.0 + c2 / 3.0) * u + a0 / 2.0) * u + v0) * u;
  };
  // Integrate v over the sub-intervals of [0, t] where it is positive.
  double acc = 0.0;
  double lo = 0.0;
  for (size_t i = 0; i <= zeros.size(); ++i) {
    double hi = (i < zeros.size()) ? std::min(zeros[i], t) : t;
    if (hi > lo) {
      if (v_raw(0.5 * (lo + hi)) > 0.0) acc += antideriv(hi) - antideriv(lo);
      lo = hi;
    }
    if (lo >= t) break;
  }
  return acc;
}

double max_reach_distance(const VehicleState& state, const SkillBounds& bounds, double t_sec) {
  const double v0 = std::max(state.v, 0.0);
  double reach;
  if (v0 >= bounds.v_max) {
    reach = bounds.v_max * t_sec;
  } else {
    double t_cap = (bounds.v_max - v0) / bounds.a_max;
    if (t_cap >= t_sec) {
      reach = v0 * t_sec + 0.5 * bounds.a_max * t_sec * t_sec;
    } else {
      reach = v0 * t_cap + 0.5 * bounds.a_max * t_cap * t_cap + bounds.v_max * (t_sec - t_cap);
    }
  }
  return std::max(reach, kXEndFloor);
}

double profile_reach_bound(const VehicleState& state, const SkillBounds& bounds, double t_sec) {
  // Pointwise dominating Hermite curve: v_e at v_max, a_e at a_min (the h11
  // basis is non-positive), a0 counted only when it adds distance.
  const double v0 = std::max(state.v, 0.0);
  const double a0 = std::max(state.a, 0.0);
  return 0.5 * (v0 + bounds.v_max) * t_sec +
         (a0 + std::abs(bounds.a_min)) * t_sec * t_sec / 12.0;
}

double skill_path_extent(const VehicleState& state, const SkillBounds& bounds, double t_sec) {
  return std::max(max_reach_distance(state, bounds, t_sec),
                  profile_reach_bound(state, bounds, t_sec));
}

Path generate_path(double y_e, double phi_e, double x_end, int n_arc) {
  if (!(x_end > 0.0)) throw std::invalid_argument("generate_path: x_end must be positive");
  Path p;
  p.x_end = x_end;
  const double slope_e = std::tan(phi_e);
  p.c2 = (3.0 * y_e - slope_e * x_end) / (x_end * x_end);
  p.c3 = (slope_e * x_end - 2.0 * y_e) / (x_end * x_end * x_end);

  p.xs.resize(n_arc + 1);
  p.ss.resize(n_arc + 1);
  const double h = x_end / n_arc;
  p.xs(0) = 0.0;
  p.ss(0) = 0.0;
  for (int i = 1; i <= n_arc; ++i) {
    p.xs(i) = (i == n_arc) ? x_end : i * h;
    const double w = p.xs(i) - p.xs(i - 1);
    const double mid = p.xs(i - 1) + 0.5 * w;
    double seg = 0.0;
    for (int k = 0; k < 4; ++k) seg += kGlWeight[k] * arc_integrand(p, mid + 0.5 * w * kGlNode[k]);
    p.ss(i) = p.ss(i - 1) + 0.5 * w * seg;
  }
  return p;
}

SpeedProfile generate_speed_profile(double v0, double a0, double v_e, double a_e, double t_sec) {
  SpeedProfile sp;
  sp.v0 = v0;
  sp.a0 = a0;
  sp.duration = t_sec;
  const double T = t_sec;
  sp.c2 = (3.0 * (v_e - v0) - (2.0 * a0 + a_e) * T) / (T * T);
  sp.c3 = (-2.0 * (v_e - v0) + (a0 + a_e) * T) / (T * T * T);

  // Locate sign changes of the cubic by scanning plus bisection; the scan
  // resolution is ample for a cubic over one skill window.
  constexpr int kScan = 128;
  double prev_t = 0.0;
  double prev_v = sp.v_raw(0.0);
  for (int i = 1; i <= kScan; ++i) {
    double t = T * i / kScan;
    double v = sp.v_raw(t);
    if ((prev_v > 0.0 && v < 0.0) || (prev_v < 0.0 && v > 0.0)) {
      double lo = prev_t, hi = t;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        if ((sp.v_raw(lo) > 0.0) == (sp.v_raw(mid) > 0.0)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      sp.zeros.push_back(0.5 * (lo + hi));
    } else if (prev_v != 0.0 && v == 0.0 && i < kScan) {
      sp.zeros.push_back(t);
    }
    prev_t = t;
    prev_v = v;
  }
  return sp;
}

Trajectory generate_skill(const VehicleState& state, const SkillParams& theta,
                          const SkillBounds& bounds, int steps, double dt, int n_arc) {
  if (steps < 1) throw std::invalid_argument("generate_skill: steps must be >= 1");
  const double t_sec = steps * dt;
  const double x_end = skill_path_extent(state, bounds, t_sec);
  const Path path = generate_path(theta.y_e, theta.phi_e, x_end, n_arc);
  const SpeedProfile prof =
      generate_speed_profile(std::max(state.v, 0.0), state.a, theta.v_e, theta.a_e, t_sec);

  const double c = std::cos(state.phi);
  const double s = std::sin(state.phi);

  Trajectory traj;
  traj.dt = dt;
  traj.states.reserve(steps + 1);
  for (int k = 0; k <= steps; ++k) {
    const double t = k * dt;
    const double arc = prof.distance(t);
    if (arc > path.length() + 1e-9)
      throw std::logic_error("generate_skill: required arc length exceeds path length");
    const double px = (k == 0) ? 0.0 : path.x_at_arc_length(arc);
    const double py = path.y(px);
    VehicleState st;
    st.x = state.x + px * c - py * s;
    st.y = state.y + px * s + py * c;
    st.phi = wrap_angle(state.phi + std::atan(path.dy(px)));
    st.v = prof.v(t);
    st.a = prof.dv(t);
    traj.states.push_back(st);
  }
  return traj;
}

}  // namespace asaprl::skill
