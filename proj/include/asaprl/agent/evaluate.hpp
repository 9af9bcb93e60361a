#pragma once

#include "asaprl/agent/sac.hpp"
#include "asaprl/sim/env.hpp"

namespace asaprl::agent {

struct EvalSummary {
  int episodes = 0;
  double mean_reward = 0.0;
  double success_rate = 0.0;
  double mean_completion = 0.0;
  double collision_rate = 0.0;
  double mean_passed_cars = 0.0;
  std::vector<sim::EpisodeMetrics> per_episode;
};

/// Deterministic-policy rollouts (tanh of the mean). Episodes are seeded by
/// index from `seed`, so identical calls give identical summaries; with
/// jobs > 1 episodes run on parallel independent environments and are merged
/// by index.
EvalSummary evaluate(const neural::Mlp<float>& actor, const sim::ScenarioConfig& scenario,
                     int skill_steps, int n_episodes, uint64_t seed, int jobs = 1);

}  // namespace asaprl::agent
