#pragma once

#include "asaprl/agent/config.hpp"
#include "asaprl/agent/sac.hpp"
#include "asaprl/demo/io.hpp"
#include "asaprl/sim/env.hpp"

namespace asaprl::agent {

struct PretrainActorResult {
  neural::Mlp<float> actor;
  double heldout_ll_before = 0.0;
  double heldout_ll_after = 0.0;
  // iteration, training loss, mean policy entropy estimate
  std::vector<std::array<double, 3>> curve;
};

/// Behavior cloning on D_theta (log-likelihood plus entropy bonus).
/// Throws on records whose theta is outside the scenario skill bounds.
PretrainActorResult pretrain_actor(const demo::SkillDataset& dtheta, const TrainConfig& cfg);

/// Roll out a (pretrained) actor for n_steps environment steps, recording
/// one transition per executed skill. When step_log is given, every inner
/// simulation step is appended to it (episode-log style).
demo::SkillRewardDataset collect_skill_rollouts(neural::Mlp<float>& actor,
                                                const sim::ScenarioConfig& scenario,
                                                long n_steps, int skill_steps, uint64_t seed,
                                                uint64_t actor_hash = 0,
                                                std::vector<sim::StepRecord>* step_log = nullptr,
                                                double exploration_std = 0.0);

struct PretrainCriticResult {
  neural::Mlp<float> q1, q2;
  double heldout_td_before = 0.0;
  double heldout_td_after = 0.0;
  std::vector<std::array<double, 2>> curve;  // iteration, training loss
};

/// Soft policy evaluation of the frozen actor on D_theta' (critic + polyak
/// target updates, temperature fixed at cfg.alpha_init).
PretrainCriticResult pretrain_critic(const demo::SkillRewardDataset& dthetap,
                                     neural::Mlp<float>& frozen_actor, const TrainConfig& cfg);

}  // namespace asaprl::agent
