#pragma once

#include <optional>
#include <string>

#include "asaprl/agent/pretrain.hpp"
#include "asaprl/agent/train.hpp"
#include "asaprl/demo/expert.hpp"
#include "asaprl/recovery/annotate.hpp"

namespace asaprl::pipeline {

/// Run manifest written at command start and finalized at command end.
struct RunManifest {
  std::string command;
  std::string config_json;  // resolved configuration
  std::string out_dir;
  std::string status = "running";
  double wall_seconds = 0.0;

  void write(const std::string& path) const;  // atomic (tmp + rename)
};

struct DemoCollectOutput {
  std::string demos_path;
  demo::ExpertRunStats stats;
  int trajectories = 0;
};

DemoCollectOutput demo_collect(const sim::ScenarioConfig& scenario,
                               const demo::ExpertPolicyConfig& expert, int episodes,
                               uint64_t seed, const std::string& out_path);

struct RecoverOutput {
  std::string dtheta_path;
  std::string report_path;
  recovery::RecoveryReport report;
};

RecoverOutput recover_demos(const std::string& demos_path, int skill_steps,
                            const recovery::AnnotateOptions& opt, const std::string& out_dir);

struct PretrainOutput {
  std::string actor_checkpoint;
  std::string critic1_checkpoint;
  std::string critic2_checkpoint;
  std::string dthetap_path;
  std::string curves_csv;
  double heldout_ll_before = 0.0;
  double heldout_ll_after = 0.0;
};

/// Actor cloning, rollout collection and critic pretraining in sequence.
PretrainOutput pretrain(const std::string& dtheta_path, const sim::ScenarioConfig& scenario,
                        const agent::TrainConfig& cfg, const std::string& out_dir);

struct AblateOutput {
  std::string summary_csv;
  std::string medians_csv;
  std::string figure_spec_json;
  int rows = 0;
};

struct AblateOptions {
  std::string suite;  // "skill-length" | "prior"
  int seeds = 3;
  std::vector<int> t_values = {1, 5, 10, 20};
  std::string demos_path;  // reuse an existing D_u file when nonempty
  int demo_episodes = 40;
  int jobs = 1;
};

AblateOutput ablate(const AblateOptions& opt, const sim::ScenarioConfig& scenario,
                    const agent::TrainConfig& base_cfg, const std::string& out_dir);

/// Shared formatting for metric CSV cells (%.9g, reproducible).
std::string format_metric(double v);

}  // namespace asaprl::pipeline
