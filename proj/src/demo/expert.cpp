#include "asaprl/demo/expert.hpp"

#include <cmath>
#include <sstream>

namespace asaprl::demo {

namespace {

struct LaneView {
  double front_gap = 1e9;
  double front_v = 0.0;
  double rear_gap = 1e9;
};

LaneView lane_view(const sim::TrafficEnv& env, int lane) {
  LaneView lv;
  const auto& w = env.world();
  for (const auto& t : w.traffic) {
    if (t.lane != lane) continue;
    double gap = t.s - w.ego_s;
    if (gap >= 0.0 && gap < lv.front_gap) {
      lv.front_gap = gap;
      lv.front_v = t.v;
    }
    if (gap < 0.0 && -gap < lv.rear_gap) lv.rear_gap = -gap;
  }
  return lv;
}

double idm_accel(const ExpertPolicyConfig& c, double v, double desired, const LaneView& lv) {
  double a = c.idm_accel * (1.0 - std::pow(v / std::max(desired, 0.1), 4.0));
  if (lv.front_gap < 1e8) {
    double gap = std::max(lv.front_gap - sim::kVehicleLength, 0.1);
    double dv = v - lv.front_v;
    double s_star =
        c.idm_min_gap + v * c.idm_headway + v * dv / (2.0 * std::sqrt(c.idm_accel * c.idm_decel));
    s_star = std::max(s_star, c.idm_min_gap);
    a -= c.idm_accel * (s_star / gap) * (s_star / gap);
  }
  return a;
}

}  // namespace

ExpertDriver::ExpertDriver(const ExpertPolicyConfig& cfg, const sim::TrafficEnv& env)
    : cfg_(cfg) {
  const auto& w = env.world();
  double half = 0.5 * (env.lanes() - 1);
  long lane = std::lround(w.ego_lat / env.config().lane_width + half);
  target_lane_ = static_cast<int>(std::clamp(lane, 0l, static_cast<long>(env.lanes() - 1)));
}

std::pair<double, double> ExpertDriver::act(const sim::TrafficEnv& env) {
  const auto& w = env.world();

  if (cooldown_ > 0) --cooldown_;

  // lane-change decision: leave a leader that is both close and slow
  LaneView cur = lane_view(env, target_lane_);
  double headway = cur.front_gap < 1e8 ? (cur.front_gap - sim::kVehicleLength) /
                                             std::max(w.ego.v, 0.5)
                                       : 1e9;
  bool constrained =
      headway < cfg_.trigger_headway && cur.front_v < cfg_.desired_speed - cfg_.speed_deficit;
  if (cooldown_ == 0 && constrained) {
    int best = target_lane_;
    double best_gap = cur.front_gap;
    for (int cand : {target_lane_ - 1, target_lane_ + 1}) {
      if (cand < 0 || cand >= env.lanes()) continue;
      LaneView lv = lane_view(env, cand);
      if (lv.rear_gap < cfg_.min_rear_gap) continue;
      if (lv.front_gap > best_gap * 1.3) {
        best = cand;
        best_gap = lv.front_gap;
      }
    }
    if (best != target_lane_) {
      target_lane_ = best;
      cooldown_ = cfg_.lane_change_cooldown;
    }
  }

  // longitudinal: IDM against the nearer constraint of current and target lane
  LaneView target_lv = lane_view(env, target_lane_);
  double a = idm_accel(cfg_, w.ego.v, cfg_.desired_speed, target_lv);
  double pedal = a >= 0.0 ? a / env.skill_bounds().a_max : a / (-env.skill_bounds().a_min);
  pedal = clamp(pedal, -1.0, 1.0);

  // lateral: pure pursuit on the target lane center
  double lookahead = clamp(0.6 * w.ego.v + 2.0, 3.0, 12.0);
  double tx, ty, th;
  env.route().pose_at(w.ego_s + lookahead, env.lane_center(target_lane_), tx, ty, th);
  double dx = tx - w.ego.x, dy = ty - w.ego.y;
  double c = std::cos(w.ego.phi), s = std::sin(w.ego.phi);
  double lx = dx * c + dy * s;
  double ly = -dx * s + dy * c;
  double dist = std::max(std::hypot(lx, ly), 1e-6);
  double alpha = std::atan2(ly, std::max(lx, 1e-3));
  double curvature = 2.0 * std::sin(alpha) / dist;
  double delta = std::atan(sim::kWheelbase * curvature);
  double steer = clamp(delta / sim::kMaxSteerAngle, -1.0, 1.0);
  return {steer, pedal};
}

ControlDemoSet run_expert(const sim::ScenarioConfig& scenario, const ExpertPolicyConfig& expert,
                          int n_episodes, uint64_t seed, ExpertRunStats* stats) {
  ControlDemoSet out;
  out.scenario = scenario;
  out.seed = seed;

  ExpertRunStats st;
  double reward_sum = 0.0;
  sim::TrafficEnv env(scenario);
  for (int ep = 0; ep < n_episodes; ++ep) {
    uint64_t ep_seed = Rng::substream(seed, "expert-episode", static_cast<uint64_t>(ep)).next_u64();
    env.reset(ep_seed);
    ExpertDriver driver(expert, env);
    ControlTrajectory traj;
    traj.episode_seed = ep_seed;
    traj.steps.push_back(DemoStep{env.ego(), 0.0, 0.0});  // initial state, no control yet
    double ep_reward = 0.0;
    while (!env.done()) {
      auto [steer, pedal] = driver.act(env);
      sim::StepOutcome o = env.step_control(steer, pedal);
      traj.steps.back().steer = steer;
      traj.steps.back().pedal = pedal;
      traj.steps.push_back(DemoStep{env.ego(), 0.0, 0.0});
      ep_reward += o.reward;
    }
    st.episodes_run += 1;
    reward_sum += ep_reward;
    switch (env.cause()) {
      case sim::Cause::success:
        st.successes += 1;
        out.trajectories.push_back(std::move(traj));
        break;
      case sim::Cause::crash:
      case sim::Cause::off_road:
        st.crashes += 1;
        break;
      default:
        st.timeouts += 1;
        break;
    }
  }
  st.mean_reward = st.episodes_run > 0 ? reward_sum / st.episodes_run : 0.0;
  if (stats) *stats = st;

  if (n_episodes > 0 && st.successes * 2 < st.episodes_run) {
    std::ostringstream msg;
    msg << "expert success rate below 50%: " << st.successes << "/" << st.episodes_run
        << " (crashes " << st.crashes << ", timeouts " << st.timeouts
        << "); tune ExpertPolicyConfig (desired_speed/trigger_headway) or lower density";
    throw std::runtime_error(msg.str());
  }
  return out;
}

}  // namespace asaprl::demo
