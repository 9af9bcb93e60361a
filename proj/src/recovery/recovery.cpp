#include "asaprl/recovery/recovery.hpp"

#include <algorithm>
#include <cmath>

#include "asaprl/util/rng.hpp"

namespace asaprl::recovery {

namespace {

Eigen::Vector4d to_vec(const SkillParams& p) { return {p.y_e, p.phi_e, p.v_e, p.a_e}; }
SkillParams to_params(const Eigen::Vector4d& v) { return {v(0), v(1), v(2), v(3)}; }

Eigen::Vector4d project(const Eigen::Vector4d& v, const SkillBounds& b) {
  Eigen::Vector4d out;
  for (int i = 0; i < 4; ++i) out(i) = clamp(v(i), b.low(i), b.high(i));
  return out;
}

struct Problem {
  const std::vector<VehicleState>& demo;
  const VehicleState& start;
  const SkillBounds& bounds;
  const RecoveryWeights& w;
  double dt;

  Eigen::VectorXd residuals(const Eigen::Vector4d& theta) const {
    skill::Trajectory tr = skill::generate_skill(start, to_params(theta), bounds,
                                                 static_cast<int>(demo.size()), dt);
    return residual_vector(demo, tr, w);
  }
};

// Latin hypercube over the bounds box: one stratum per start and dimension,
// deterministic given the rng.
std::vector<Eigen::Vector4d> latin_hypercube(int n, const SkillBounds& b, Rng& rng) {
  std::vector<std::array<int, 4>> strata(n);
  for (int d = 0; d < 4; ++d) {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
    for (int i = 0; i < n; ++i) strata[i][d] = perm[i];
  }
  std::vector<Eigen::Vector4d> out(n);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < 4; ++d) {
      double u = (strata[i][d] + rng.uniform()) / n;
      out[i](d) = b.low(d) + u * (b.high(d) - b.low(d));
    }
  return out;
}

std::vector<Eigen::Vector4d> make_starts(const Problem& prob, const RecoveryConfig& cfg) {
  const SkillBounds& b = prob.bounds;
  std::vector<Eigen::Vector4d> starts;
  starts.reserve(cfg.n_starts);

  // 1) continue current motion
  double t_sec = prob.dt * static_cast<double>(prob.demo.size());
  Eigen::Vector4d cont(0.0, 0.0, clamp(prob.start.v + prob.start.a * t_sec, 0.0, b.v_max), 0.0);
  starts.push_back(project(cont, b));

  // 2) terminal measurements of the demonstrated window, in the start frame
  if (static_cast<int>(starts.size()) < cfg.n_starts && !prob.demo.empty()) {
    const VehicleState& last = prob.demo.back();
    double dx = last.x - prob.start.x, dy = last.y - prob.start.y;
    double c = std::cos(prob.start.phi), s = std::sin(prob.start.phi);
    Eigen::Vector4d term(-dx * s + dy * c, wrap_angle(last.phi - prob.start.phi), last.v, last.a);
    starts.push_back(project(term, b));
  }

  int remaining = cfg.n_starts - static_cast<int>(starts.size());
  if (remaining > 0) {
    Rng rng = Rng::substream(cfg.seed, "recovery-starts");
    for (const auto& s : latin_hypercube(remaining, b, rng)) starts.push_back(s);
  }
  starts.resize(cfg.n_starts, starts.front());
  return starts;
}

// Projected Levenberg-Marquardt with a forward-difference Jacobian.
// Returns the best objective (sum of squares) found from this start.
double solve_from(const Problem& prob, const RecoveryConfig& cfg, Eigen::Vector4d& theta) {
  Eigen::VectorXd r = prob.residuals(theta);
  double obj = r.squaredNorm();
  double lambda = 1e-3;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    Eigen::MatrixXd jac(r.size(), 4);
    for (int d = 0; d < 4; ++d) {
      double h = cfg.fd_step * std::max(1.0, std::abs(theta(d)));
      Eigen::Vector4d th = theta;
      // step inward when the bound blocks a forward step
      if (th(d) + h > prob.bounds.high(d)) h = -h;
      th(d) += h;
      jac.col(d) = (prob.residuals(th) - r) / h;
    }
    Eigen::Matrix4d jtj = jac.transpose() * jac;
    Eigen::Vector4d jtr = jac.transpose() * r;

    bool improved = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::Matrix4d damped = jtj;
      for (int d = 0; d < 4; ++d) damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
      Eigen::Vector4d step = damped.ldlt().solve(-jtr);
      Eigen::Vector4d cand = project(theta + step, prob.bounds);
      Eigen::VectorXd rc = prob.residuals(cand);
      double oc = rc.squaredNorm();
      if (oc < obj) {
        double rel = (obj - oc) / std::max(obj, 1e-300);
        theta = cand;
        r = rc;
        obj = oc;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (rel < cfg.min_rel_decrease) return obj;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
    if (obj < 1e-22) break;
  }
  return obj;
}

}  // namespace

Eigen::VectorXd residual_vector(const std::vector<VehicleState>& demo,
                                const skill::Trajectory& candidate, const RecoveryWeights& w) {
  const int T = static_cast<int>(demo.size());
  Eigen::VectorXd r(5 * T);
  const double sxy = std::sqrt(w.w_xy), sphi = std::sqrt(w.w_phi), sv = std::sqrt(w.w_v),
               sa = std::sqrt(w.w_a);
  for (int t = 0; t < T; ++t) {
    const VehicleState& d = demo[t];
    const VehicleState& c = candidate.states[t + 1];  // states[0] is the start state
    r(5 * t + 0) = sxy * (c.x - d.x);
    r(5 * t + 1) = sxy * (c.y - d.y);
    r(5 * t + 2) = sphi * wrap_angle(c.phi - d.phi);
    r(5 * t + 3) = sv * (c.v - d.v);
    r(5 * t + 4) = sa * (c.a - d.a);
  }
  return r;
}

double residual_norm(const std::vector<VehicleState>& demo, const VehicleState& start_state,
                     const SkillParams& theta, const SkillBounds& bounds,
                     const RecoveryWeights& w, double dt) {
  skill::Trajectory tr =
      skill::generate_skill(start_state, theta, bounds, static_cast<int>(demo.size()), dt);
  return residual_vector(demo, tr, w).norm();
}

RecoveryResult recover(const std::vector<VehicleState>& demo, const VehicleState& start_state,
                       const SkillBounds& bounds, const RecoveryConfig& cfg, double dt) {
  if (demo.empty()) throw std::invalid_argument("recover: empty demonstration window");
  Problem prob{demo, start_state, bounds, cfg.weights, dt};
  auto starts = make_starts(prob, cfg);

  RecoveryResult best;
  double best_obj = std::numeric_limits<double>::infinity();
  const double tol_obj = cfg.residual_tolerance * cfg.residual_tolerance;

  for (int i = 0; i < cfg.n_starts; ++i) {
    Eigen::Vector4d theta = project(starts[i], bounds);
    double obj = solve_from(prob, cfg, theta);
    best.starts_tried = i + 1;
    if (obj < best_obj) {
      best_obj = obj;
      best.theta_hat = to_params(theta);
    }
    if (best_obj <= tol_obj * 1e-6) break;  // already far below tolerance
  }
  best.residual = std::sqrt(best_obj);
  best.converged = best.residual <= cfg.residual_tolerance;
  return best;
}

std::vector<Segment> segment_demonstration(const std::vector<VehicleState>& traj, int T) {
  std::vector<Segment> out;
  if (T < 1) throw std::invalid_argument("segment_demonstration: T must be >= 1");
  const int len = static_cast<int>(traj.size());
  const int n_segments = (len - 1) / T;
  out.reserve(std::max(n_segments, 0));
  for (int k = 0; k < n_segments; ++k) {
    Segment seg;
    seg.start_state = traj[static_cast<size_t>(k) * T];
    seg.states.assign(traj.begin() + k * T + 1, traj.begin() + (k + 1) * T + 1);
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace asaprl::recovery
