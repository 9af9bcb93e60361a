#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "asaprl/core/types.hpp"
#include "asaprl/recovery/recovery.hpp"
#include "asaprl/sim/scenario.hpp"

namespace asaprl::demo {

/// Control-space demonstrations D_u: replayable per-step records.
struct DemoStep {
  VehicleState state;
  double steer = 0.0;
  double pedal = 0.0;
};

struct ControlTrajectory {
  uint64_t episode_seed = 0;
  std::vector<DemoStep> steps;
};

struct ControlDemoSet {
  int version = 1;
  sim::ScenarioConfig scenario;
  uint64_t seed = 0;
  std::vector<ControlTrajectory> trajectories;
};

/// Skill-space demonstrations D_theta: one record per recovered segment.
struct SkillRecord {
  int traj_index = 0;
  int seg_index = 0;
  Eigen::VectorXd obs;  // observation at the segment start
  VehicleState start_state;
  SkillParams theta;
  double residual = 0.0;
  bool converged = false;
  bool flagged = false;  // residual above the configured cutoff
};

struct SkillDataset {
  int version = 1;
  sim::ScenarioConfig scenario;
  uint64_t seed = 0;
  int skill_steps = 10;
  recovery::RecoveryWeights weights;
  std::vector<SkillRecord> records;
};

/// Skill rollout transitions D_theta': pretrained-actor rollouts with reward
/// and next-state information for critic pretraining.
struct SkillRewardRecord {
  Eigen::VectorXd obs;
  SkillParams theta;
  double reward = 0.0;  // T-step sum
  Eigen::VectorXd next_obs;
  bool done = false;
};

struct SkillRewardDataset {
  int version = 1;
  sim::ScenarioConfig scenario;
  uint64_t seed = 0;
  int skill_steps = 10;
  uint64_t actor_hash = 0;  // provenance: hash of the generating checkpoint
  std::vector<SkillRewardRecord> records;
};

// JSON-lines readers/writers. Imports validate the format version and name
// the first missing field in the error message.
void save_control_demos(const ControlDemoSet& d, const std::string& path);
ControlDemoSet load_control_demos(const std::string& path);

void save_skill_dataset(const SkillDataset& d, const std::string& path);
SkillDataset load_skill_dataset(const std::string& path);

void save_skill_reward_dataset(const SkillRewardDataset& d, const std::string& path);
SkillRewardDataset load_skill_reward_dataset(const std::string& path);

}  // namespace asaprl::demo
