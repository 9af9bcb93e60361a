#pragma once

#include <string>
#include <vector>

#include "asaprl/agent/config.hpp"
#include "asaprl/agent/evaluate.hpp"

namespace asaprl::agent {

/// Checkpoint/dataset inputs; which ones are required depends on the prior
/// mode (double_init needs actor + critics, the other prior modes the actor).
struct TrainInputs {
  std::string actor_checkpoint;
  std::string critic1_checkpoint;
  std::string critic2_checkpoint;
};

struct TrainResult {
  long env_steps = 0;
  long gradient_steps = 0;
  EvalSummary final_eval;
  std::string curve_csv;
  std::string actor_checkpoint;
  std::string critic1_checkpoint;
  std::string critic2_checkpoint;
  std::vector<std::string> files_read;  // audit of external inputs consumed
};

/// The skill-space maximum-entropy RL loop with prior-mode dispatch. Writes
/// learning-curve CSV, run config echo and final checkpoints into out_dir.
/// Aborts (throws) with a diagnostic dump if any loss turns non-finite.
TrainResult train(const TrainConfig& cfg, const sim::ScenarioConfig& scenario,
                  const TrainInputs& inputs, const std::string& out_dir);

/// Learning-curve row as written to the CSV.
struct CurvePoint {
  long iteration = 0;
  long env_steps = 0;
  EvalSummary eval;
  // training statistics at the most recent update before this evaluation
  double alpha = 0.0;
  double entropy = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double mean_q = 0.0;
};

}  // namespace asaprl::agent
