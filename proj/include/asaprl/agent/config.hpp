#pragma once

#include <string>
#include <vector>

namespace asaprl::agent {

enum class PriorMode { no_prior, bc_only, init_actor, kl_init_actor, double_init };

std::string to_string(PriorMode m);
PriorMode prior_mode_from_string(const std::string& s);

/// Every RL hyperparameter in one place. Defaults follow the module-level
/// design; acceptance/benchmark runs override sizes for wall-clock budgets.
struct TrainConfig {
  double gamma = 0.99;           // discount per skill step (semi-MDP)
  double alpha_init = 0.2;       // initial temperature
  double target_entropy = -4.0;  // delta: -dim(theta)
  double lr_actor = 3e-4;        // lambda_pi
  double lr_critic = 3e-4;       // lambda_Q
  double lr_alpha = 1e-4;        // lambda_alpha
  double lr_bc = 1e-3;           // behavior-cloning rate (actor pretraining)
  double polyak = 0.005;         // m: target <- m*net + (1-m)*target
  double bc_entropy_weight = 0.01;  // beta in the cloning objective
  int skill_steps = 10;             // T
  int batch_size = 256;
  int replay_capacity = 200000;
  int update_start = 1000;  // env steps before gradient updates begin

  int actor_pretrain_iters = 5000;
  int rollout_steps = 20000;
  int critic_pretrain_iters = 15000;
  /// Minimum per-dimension std (pre-squash) while collecting D_theta'; keeps
  /// the critic's action coverage wide enough around a near-deterministic
  /// cloned policy.
  double rollout_exploration_std = 0.1;

  long total_env_steps = 60000;
  int eval_interval_steps = 2000;
  int eval_episodes = 10;

  PriorMode prior_mode = PriorMode::no_prior;
  double kl_weight = 0.1;      // kl_init_actor mode
  bool double_q = true;        // two critics with min target
  bool paper_sign_target = false;  // literal-sign soft target variant
  bool drop_flagged_records = true;  // skip high-residual records in cloning

  std::vector<int> hidden = {256, 256};
  uint64_t seed = 0;

  std::string to_json_string() const;
  static TrainConfig from_json_string(const std::string& text);
};

}  // namespace asaprl::agent
