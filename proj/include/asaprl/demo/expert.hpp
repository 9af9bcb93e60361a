#pragma once

#include "asaprl/demo/io.hpp"
#include "asaprl/sim/env.hpp"

namespace asaprl::demo {

/// Scripted driving expert: IDM longitudinal control toward a desired speed,
/// gap-triggered lane changes, pure-pursuit steering on the target lane.
struct ExpertPolicyConfig {
  double desired_speed = 8.5;    // m/s
  double trigger_headway = 2.5;  // s; consider changing lanes below this
  double speed_deficit = 0.5;    // leader must be this much below desired
  int lane_change_cooldown = 30;  // steps
  double idm_accel = 2.0;
  double idm_decel = 2.5;
  double idm_min_gap = 2.5;
  double idm_headway = 1.2;
  double min_rear_gap = 8.0;  // safety gap in the target lane
};

/// Stateful controller for one episode.
class ExpertDriver {
 public:
  ExpertDriver(const ExpertPolicyConfig& cfg, const sim::TrafficEnv& env);
  /// Control for the current env state, in [-1,1]^2.
  std::pair<double, double> act(const sim::TrafficEnv& env);

 private:
  ExpertPolicyConfig cfg_;
  int target_lane_ = 0;
  int cooldown_ = 0;
};

struct ExpertRunStats {
  int episodes_run = 0;
  int successes = 0;
  int crashes = 0;
  int timeouts = 0;
  double mean_reward = 0.0;
};

/// Collect success-filtered control-space demonstrations. Throws with a
/// tuning diagnostic when the batch success rate falls below 50%.
ControlDemoSet run_expert(const sim::ScenarioConfig& scenario, const ExpertPolicyConfig& expert,
                          int n_episodes, uint64_t seed, ExpertRunStats* stats = nullptr);

}  // namespace asaprl::demo
