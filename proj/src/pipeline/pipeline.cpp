#include "asaprl/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "asaprl/neural/checkpoint.hpp"

namespace asaprl::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_metric(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void RunManifest::write(const std::string& path) const {
  json j{{"command", command},
         {"config", config_json.empty() ? json::object() : json::parse(config_json)},
         {"out_dir", out_dir},
         {"status", status},
         {"wall_seconds", wall_seconds},
         {"version", ASAPRL_VERSION},
         {"git", ASAPRL_GIT_SHA}};
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
  }
  fs::rename(tmp, path);
}

DemoCollectOutput demo_collect(const sim::ScenarioConfig& scenario,
                               const demo::ExpertPolicyConfig& expert, int episodes,
                               uint64_t seed, const std::string& out_path) {
  DemoCollectOutput out;
  demo::ControlDemoSet demos = demo::run_expert(scenario, expert, episodes, seed, &out.stats);
  if (!out_path.empty()) {
    if (fs::path(out_path).has_parent_path())
      fs::create_directories(fs::path(out_path).parent_path());
    demo::save_control_demos(demos, out_path);
  }
  out.demos_path = out_path;
  out.trajectories = static_cast<int>(demos.trajectories.size());
  return out;
}

RecoverOutput recover_demos(const std::string& demos_path, int skill_steps,
                            const recovery::AnnotateOptions& opt, const std::string& out_dir) {
  fs::create_directories(out_dir);
  demo::ControlDemoSet demos = demo::load_control_demos(demos_path);
  RecoverOutput out;
  demo::SkillDataset dtheta = recovery::annotate_demonstrations(
      demos, demos.scenario.skill_bounds(), skill_steps, opt, &out.report);
  out.dtheta_path = out_dir + "/dtheta.jsonl";
  demo::save_skill_dataset(dtheta, out.dtheta_path);
  out.report_path = out_dir + "/recovery_report.json";
  std::ofstream rep(out.report_path);
  rep << out.report.to_json_string() << "\n";
  return out;
}

PretrainOutput pretrain(const std::string& dtheta_path, const sim::ScenarioConfig& scenario,
                        const agent::TrainConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  demo::SkillDataset dtheta = demo::load_skill_dataset(dtheta_path);

  PretrainOutput out;
  agent::PretrainActorResult actor_res = agent::pretrain_actor(dtheta, cfg);
  out.heldout_ll_before = actor_res.heldout_ll_before;
  out.heldout_ll_after = actor_res.heldout_ll_after;
  out.actor_checkpoint = out_dir + "/actor.ckpt";
  neural::save_checkpoint(neural::Checkpoint::from(actor_res.actor), out.actor_checkpoint);

  uint64_t actor_hash = neural::file_hash(out.actor_checkpoint);
  demo::SkillRewardDataset dthetap = agent::collect_skill_rollouts(
      actor_res.actor, scenario, cfg.rollout_steps, cfg.skill_steps, cfg.seed, actor_hash,
      nullptr, cfg.rollout_exploration_std);
  out.dthetap_path = out_dir + "/dthetap.jsonl";
  demo::save_skill_reward_dataset(dthetap, out.dthetap_path);

  agent::PretrainCriticResult critic_res = agent::pretrain_critic(dthetap, actor_res.actor, cfg);
  out.critic1_checkpoint = out_dir + "/critic1.ckpt";
  out.critic2_checkpoint = out_dir + "/critic2.ckpt";
  neural::save_checkpoint(neural::Checkpoint::from(critic_res.q1), out.critic1_checkpoint);
  neural::save_checkpoint(neural::Checkpoint::from(critic_res.q2), out.critic2_checkpoint);

  out.curves_csv = out_dir + "/pretrain_curves.csv";
  std::ofstream curves(out.curves_csv);
  curves << "phase,iteration,loss,entropy\n";
  for (const auto& row : actor_res.curve)
    curves << "actor," << static_cast<long>(row[0]) << "," << format_metric(row[1]) << ","
           << format_metric(row[2]) << "\n";
  for (const auto& row : critic_res.curve)
    curves << "critic," << static_cast<long>(row[0]) << "," << format_metric(row[1]) << ",\n";
  return out;
}

namespace {

struct AblateRow {
  std::string param;
  uint64_t seed;
  agent::EvalSummary eval;
};

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

AblateOutput ablate(const AblateOptions& opt, const sim::ScenarioConfig& scenario,
                    const agent::TrainConfig& base_cfg, const std::string& out_dir) {
  if (opt.suite != "skill-length" && opt.suite != "prior")
    throw std::invalid_argument("unknown ablation suite: " + opt.suite);
  fs::create_directories(out_dir);

  std::string demos_path = opt.demos_path;
  if (demos_path.empty()) {
    demos_path = out_dir + "/demos.jsonl";
    demo_collect(scenario, demo::ExpertPolicyConfig{}, opt.demo_episodes, base_cfg.seed + 9000,
                 demos_path);
  }

  std::vector<AblateRow> rows;
  std::vector<std::pair<std::string, std::string>> curves;  // series name, csv path

  auto pretrain_for = [&](int T, const std::string& tag) {
    recovery::AnnotateOptions aopt;
    aopt.jobs = opt.jobs;
    aopt.segment_stride = T == 1 ? 5 : 1;  // one-step windows are plentiful
    RecoverOutput rec = recover_demos(demos_path, T, aopt, out_dir + "/recover_" + tag);
    agent::TrainConfig pcfg = base_cfg;
    pcfg.skill_steps = T;
    return pretrain(rec.dtheta_path, scenario, pcfg, out_dir + "/pretrain_" + tag);
  };

  if (opt.suite == "skill-length") {
    for (int T : opt.t_values) {
      std::string tag = "T" + std::to_string(T);
      PretrainOutput pre = pretrain_for(T, tag);
      for (int s = 0; s < opt.seeds; ++s) {
        agent::TrainConfig cfg = base_cfg;
        cfg.skill_steps = T;
        cfg.prior_mode = agent::PriorMode::double_init;
        cfg.seed = base_cfg.seed + static_cast<uint64_t>(s);
        agent::TrainInputs in;
        in.actor_checkpoint = pre.actor_checkpoint;
        in.critic1_checkpoint = pre.critic1_checkpoint;
        in.critic2_checkpoint = pre.critic2_checkpoint;
        std::string run_dir = out_dir + "/run_" + tag + "_s" + std::to_string(s);
        agent::TrainResult tr = agent::train(cfg, scenario, in, run_dir);
        rows.push_back({tag, cfg.seed, tr.final_eval});
        curves.emplace_back(tag + "_seed" + std::to_string(s), tr.curve_csv);
      }
    }
  } else {
    PretrainOutput pre = pretrain_for(base_cfg.skill_steps, "base");
    const agent::PriorMode modes[] = {agent::PriorMode::no_prior, agent::PriorMode::bc_only,
                                      agent::PriorMode::init_actor,
                                      agent::PriorMode::kl_init_actor,
                                      agent::PriorMode::double_init};
    for (auto mode : modes) {
      for (int s = 0; s < opt.seeds; ++s) {
        agent::TrainConfig cfg = base_cfg;
        cfg.prior_mode = mode;
        cfg.seed = base_cfg.seed + static_cast<uint64_t>(s);
        agent::TrainInputs in;
        if (mode != agent::PriorMode::no_prior) {
          in.actor_checkpoint = pre.actor_checkpoint;
          if (mode == agent::PriorMode::double_init) {
            in.critic1_checkpoint = pre.critic1_checkpoint;
            in.critic2_checkpoint = pre.critic2_checkpoint;
          }
        }
        std::string run_dir = out_dir + "/run_" + agent::to_string(mode) + "_s" + std::to_string(s);
        agent::TrainResult tr = agent::train(cfg, scenario, in, run_dir);
        rows.push_back({agent::to_string(mode), cfg.seed, tr.final_eval});
        curves.emplace_back(agent::to_string(mode) + "_seed" + std::to_string(s), tr.curve_csv);
      }
    }
  }

  AblateOutput out;
  out.rows = static_cast<int>(rows.size());
  out.summary_csv = out_dir + "/summary.csv";
  {
    std::ofstream sum(out.summary_csv);
    sum << "suite,param,seed,reward,success_rate,completion,collision_rate,passed_cars\n";
    for (const auto& r : rows)
      sum << opt.suite << "," << r.param << "," << r.seed << ","
          << format_metric(r.eval.mean_reward) << "," << format_metric(r.eval.success_rate)
          << "," << format_metric(r.eval.mean_completion) << ","
          << format_metric(r.eval.collision_rate) << ","
          << format_metric(r.eval.mean_passed_cars) << "\n";
  }
  out.medians_csv = out_dir + "/medians.csv";
  {
    std::ofstream med(out.medians_csv);
    med << "suite,param,median_reward,median_success_rate\n";
    std::vector<std::string> params;
    for (const auto& r : rows)
      if (std::find(params.begin(), params.end(), r.param) == params.end())
        params.push_back(r.param);
    for (const auto& p : params) {
      std::vector<double> rew, suc;
      for (const auto& r : rows)
        if (r.param == p) {
          rew.push_back(r.eval.mean_reward);
          suc.push_back(r.eval.success_rate);
        }
      med << opt.suite << "," << p << "," << format_metric(median(rew)) << ","
          << format_metric(median(suc)) << "\n";
    }
  }
  out.figure_spec_json = out_dir + "/figure_spec.json";
  {
    json series = json::array();
    for (const auto& [name, path] : curves)
      series.push_back({{"name", name}, {"csv", path}, {"x", "env_steps"}, {"y", "reward"}});
    json spec{{"title", opt.suite == "skill-length" ? "Skill length ablation"
                                                    : "Prior incorporation ablation"},
              {"x_axis", "environment steps"},
              {"y_axis", "evaluation reward"},
              {"series", series}};
    std::ofstream fsp(out.figure_spec_json);
    fsp << spec.dump(2) << "\n";
  }
  return out;
}

}  // namespace asaprl::pipeline
