// Command-line front end: demo collection, skill recovery, pretraining,
// training, evaluation and the ablation suites. Exit codes: 0 success,
// 1 runtime/data error, 2 usage error.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "asaprl/neural/checkpoint.hpp"
#include "asaprl/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace asaprl;

namespace {

std::string resolve_out(const std::string& out) {
  if (out.empty()) return out;
  fs::path p(out);
  const char* root = std::getenv("ASAPRL_OUT_DIR");
  if (p.is_relative() && root && *root) return (fs::path(root) / p).string();
  return out;
}

struct ConfigOverlay {
  json j = json::object();
  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    j = json::parse(in);
  }
  sim::ScenarioConfig scenario(const std::string& kind_or_path) const {
    sim::ScenarioConfig c;
    if (kind_or_path.size() > 5 && kind_or_path.ends_with(".json")) {
      c = sim::ScenarioConfig::load(kind_or_path);
    } else if (!kind_or_path.empty()) {
      c.kind = sim::scenario_kind_from_string(kind_or_path);
      if (c.kind == sim::ScenarioKind::highway) c.lanes = 3;
    }
    if (j.contains("scenario")) {
      json merged = json::parse(c.to_json_string());
      merged.update(j["scenario"]);
      c = sim::ScenarioConfig::from_json_string(merged.dump());
    }
    return c;
  }
  agent::TrainConfig train() const {
    agent::TrainConfig c;
    if (j.contains("train")) {
      json merged = json::parse(c.to_json_string());
      merged.update(j["train"]);
      c = agent::TrainConfig::from_json_string(merged.dump());
    }
    return c;
  }
  demo::ExpertPolicyConfig expert() const {
    demo::ExpertPolicyConfig c;
    if (j.contains("expert")) {
      const json& e = j["expert"];
      if (e.contains("desired_speed")) c.desired_speed = e["desired_speed"].get<double>();
      if (e.contains("trigger_headway")) c.trigger_headway = e["trigger_headway"].get<double>();
      if (e.contains("lane_change_cooldown"))
        c.lane_change_cooldown = e["lane_change_cooldown"].get<int>();
    }
    return c;
  }
};

class ManifestGuard {
 public:
  ManifestGuard(const std::string& path, const std::string& command,
                const std::string& config_json, const std::string& out_dir)
      : path_(path), start_(std::chrono::steady_clock::now()) {
    manifest_.command = command;
    manifest_.config_json = config_json;
    manifest_.out_dir = out_dir;
    if (fs::path(path_).has_parent_path()) fs::create_directories(fs::path(path_).parent_path());
    manifest_.write(path_);
  }
  void finish(const std::string& status) {
    manifest_.status = status;
    manifest_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    manifest_.write(path_);
  }

 private:
  std::string path_;
  pipeline::RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

void print_eval_table(const agent::EvalSummary& s) {
  std::cout << "stage 1  reward          " << pipeline::format_metric(s.mean_reward) << "\n";
  std::cout << "stage 2  success_rate    " << pipeline::format_metric(s.success_rate) << "\n";
  std::cout << "         completion      " << pipeline::format_metric(s.mean_completion) << "\n";
  std::cout << "stage 3  collision_rate  " << pipeline::format_metric(s.collision_rate) << "\n";
  std::cout << "         passed_cars     " << pipeline::format_metric(s.mean_passed_cars)
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skill-space reinforcement learning toolkit for dense-traffic driving"};
  app.set_version_flag("--version", std::string(ASAPRL_VERSION) + " (" + ASAPRL_GIT_SHA + ")");
  app.require_subcommand(1);

  std::string config_path;
  int jobs = 1;
  app.add_option("--config", config_path, "JSON config overlay (scenario/train/expert keys)");
  app.add_option("--jobs", jobs, "parallel env workers where supported")->default_val(1);

  // demo-collect
  auto* cmd_demo = app.add_subcommand("demo-collect", "collect expert demonstrations");
  std::string dc_scenario = "corridor", dc_out;
  int dc_episodes = 20;
  uint64_t dc_seed = 0;
  cmd_demo->add_option("--scenario", dc_scenario, "scenario kind or config json");
  cmd_demo->add_option("--episodes", dc_episodes)->check(CLI::NonNegativeNumber);
  cmd_demo->add_option("--seed", dc_seed);
  cmd_demo->add_option("--out", dc_out, "output demonstration file")->required();

  // recover
  auto* cmd_rec = app.add_subcommand("recover", "recover skill parameters from demonstrations");
  std::string rc_demos, rc_out;
  int rc_T = 10, rc_nstarts = -1, rc_stride = 1;
  std::vector<double> rc_weights;
  cmd_rec->add_option("--demos", rc_demos)->required();
  cmd_rec->add_option("--out", rc_out)->required();
  cmd_rec->add_option("--T", rc_T, "skill horizon in steps");
  cmd_rec->add_option("--n-starts", rc_nstarts);
  cmd_rec->add_option("--weights", rc_weights, "w_xy,w_phi,w_v,w_a")->expected(4);
  cmd_rec->add_option("--stride", rc_stride, "recover every k-th segment");

  // pretrain
  auto* cmd_pre = app.add_subcommand("pretrain", "actor cloning, rollouts, critic pretraining");
  std::string pt_dtheta, pt_scenario = "corridor", pt_out;
  uint64_t pt_seed = 0;
  cmd_pre->add_option("--dtheta", pt_dtheta)->required();
  cmd_pre->add_option("--scenario", pt_scenario);
  cmd_pre->add_option("--seed", pt_seed);
  cmd_pre->add_option("--out", pt_out)->required();

  // train
  auto* cmd_train = app.add_subcommand("train", "skill-space RL with prior-mode dispatch");
  std::string tr_scenario = "corridor", tr_mode = "no_prior", tr_out;
  std::string tr_actor, tr_critic1, tr_critic2;
  int tr_T = -1;
  long tr_env_steps = -1;
  uint64_t tr_seed = 0;
  cmd_train->add_option("--scenario", tr_scenario);
  cmd_train->add_option("--prior-mode", tr_mode);
  cmd_train->add_option("--T", tr_T, "skill horizon in steps");
  cmd_train->add_option("--seed", tr_seed);
  cmd_train->add_option("--env-steps", tr_env_steps);
  cmd_train->add_option("--actor", tr_actor, "actor checkpoint (prior modes)");
  cmd_train->add_option("--critic1", tr_critic1);
  cmd_train->add_option("--critic2", tr_critic2);
  cmd_train->add_option("--out", tr_out)->required();

  // eval
  auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint (three-stage metrics)");
  std::string ev_ckpt, ev_scenario = "corridor", ev_out;
  int ev_episodes = 10, ev_T = 10;
  uint64_t ev_seed = 0;
  cmd_eval->add_option("--checkpoint", ev_ckpt)->required();
  cmd_eval->add_option("--scenario", ev_scenario);
  cmd_eval->add_option("--episodes", ev_episodes)->check(CLI::NonNegativeNumber);
  cmd_eval->add_option("--seed", ev_seed);
  cmd_eval->add_option("--T", ev_T);
  cmd_eval->add_option("--out", ev_out, "optional metrics directory");

  // ablate
  auto* cmd_abl = app.add_subcommand("ablate", "run an ablation suite grid");
  std::string ab_suite, ab_scenario = "corridor", ab_out, ab_demos;
  int ab_seeds = 3;
  std::vector<int> ab_tvals;
  long ab_env_steps = -1;
  uint64_t ab_seed = 0;
  cmd_abl->add_option("--suite", ab_suite)->required()->check(CLI::IsMember({"skill-length", "prior"}));
  cmd_abl->add_option("--seeds", ab_seeds)->check(CLI::PositiveNumber);
  cmd_abl->add_option("--scenario", ab_scenario);
  cmd_abl->add_option("--t-values", ab_tvals);
  cmd_abl->add_option("--env-steps", ab_env_steps);
  cmd_abl->add_option("--seed", ab_seed);
  cmd_abl->add_option("--demos", ab_demos, "reuse an existing demonstration file");
  cmd_abl->add_option("--out", ab_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    ConfigOverlay overlay;
    if (!config_path.empty()) overlay.load(config_path);

    if (*cmd_demo) {
      sim::ScenarioConfig scen = overlay.scenario(dc_scenario);
      scen.seed = dc_seed;
      std::string out = resolve_out(dc_out);
      ManifestGuard manifest(out + ".manifest.json", "demo-collect", scen.to_json_string(),
                             fs::path(out).parent_path().string());
      auto res = pipeline::demo_collect(scen, overlay.expert(), dc_episodes, dc_seed, out);
      manifest.finish("ok");
      std::cout << "episodes " << res.stats.episodes_run << " successes "
                << res.stats.successes << " kept " << res.trajectories << " -> "
                << res.demos_path << "\n";
    } else if (*cmd_rec) {
      std::string out = resolve_out(rc_out);
      recovery::AnnotateOptions opt;
      opt.jobs = jobs;
      opt.segment_stride = rc_stride;
      if (rc_nstarts > 0) opt.recovery.n_starts = rc_nstarts;
      if (!rc_weights.empty())
        opt.recovery.weights =
            recovery::RecoveryWeights{rc_weights[0], rc_weights[1], rc_weights[2], rc_weights[3]};
      ManifestGuard manifest(out + "/manifest.json", "recover", "{}", out);
      auto res = pipeline::recover_demos(resolve_out(rc_demos), rc_T, opt, out);
      manifest.finish("ok");
      std::cout << "segments " << res.report.segments << " convergence_rate "
                << pipeline::format_metric(res.report.convergence_rate()) << " mean_residual "
                << pipeline::format_metric(res.report.mean_residual) << "\n"
                << res.dtheta_path << "\n";
    } else if (*cmd_pre) {
      sim::ScenarioConfig scen = overlay.scenario(pt_scenario);
      agent::TrainConfig cfg = overlay.train();
      cfg.seed = pt_seed;
      scen.seed = pt_seed;
      std::string out = resolve_out(pt_out);
      ManifestGuard manifest(out + "/manifest.json", "pretrain", cfg.to_json_string(), out);
      auto res = pipeline::pretrain(resolve_out(pt_dtheta), scen, cfg, out);
      manifest.finish("ok");
      std::cout << "held-out log-likelihood " << pipeline::format_metric(res.heldout_ll_before)
                << " -> " << pipeline::format_metric(res.heldout_ll_after) << "\n"
                << res.actor_checkpoint << "\n";
    } else if (*cmd_train) {
      sim::ScenarioConfig scen = overlay.scenario(tr_scenario);
      agent::TrainConfig cfg = overlay.train();
      cfg.prior_mode = agent::prior_mode_from_string(tr_mode);
      if (tr_T > 0) cfg.skill_steps = tr_T;
      if (tr_env_steps > 0) cfg.total_env_steps = tr_env_steps;
      cfg.seed = tr_seed;
      scen.seed = tr_seed;

      const bool wants_actor = cfg.prior_mode != agent::PriorMode::no_prior;
      if (wants_actor && tr_actor.empty()) {
        std::cerr << "usage error: --prior-mode " << tr_mode << " requires --actor\n";
        return 2;
      }
      if (cfg.prior_mode == agent::PriorMode::double_init &&
          (tr_critic1.empty() || tr_critic2.empty())) {
        std::cerr << "usage error: double_init requires --critic1 and --critic2\n";
        return 2;
      }
      std::string out = resolve_out(tr_out);
      ManifestGuard manifest(out + "/manifest.json", "train", cfg.to_json_string(), out);
      agent::TrainInputs in;
      in.actor_checkpoint = tr_actor;
      in.critic1_checkpoint = tr_critic1;
      in.critic2_checkpoint = tr_critic2;
      auto res = agent::train(cfg, scen, in, out);
      manifest.finish("ok");
      std::cout << "env_steps " << res.env_steps << " gradient_steps " << res.gradient_steps
                << "\n";
      print_eval_table(res.final_eval);
      std::cout << res.curve_csv << "\n";
    } else if (*cmd_eval) {
      sim::ScenarioConfig scen = overlay.scenario(ev_scenario);
      scen.seed = ev_seed;
      auto actor = neural::load_checkpoint(resolve_out(ev_ckpt)).to_mlp<float>();
      auto summary = agent::evaluate(actor, scen, ev_T, ev_episodes, ev_seed, jobs);
      print_eval_table(summary);
      if (!ev_out.empty()) {
        std::string out = resolve_out(ev_out);
        fs::create_directories(out);
        std::ofstream csv(out + "/eval_metrics.csv");
        csv << "scenario,seed,episode,reward,success,completion,collision,passed_cars\n";
        for (size_t i = 0; i < summary.per_episode.size(); ++i) {
          const auto& m = summary.per_episode[i];
          csv << sim::to_string(scen.kind) << "," << ev_seed << "," << i << ","
              << pipeline::format_metric(m.episode_reward) << "," << (m.success ? 1 : 0) << ","
              << pipeline::format_metric(m.completion) << "," << (m.collision ? 1 : 0) << ","
              << m.passed_cars << "\n";
        }
      }
    } else if (*cmd_abl) {
      sim::ScenarioConfig scen = overlay.scenario(ab_scenario);
      agent::TrainConfig cfg = overlay.train();
      cfg.seed = ab_seed;
      scen.seed = ab_seed;
      if (ab_env_steps > 0) cfg.total_env_steps = ab_env_steps;
      pipeline::AblateOptions opt;
      opt.suite = ab_suite;
      opt.seeds = ab_seeds;
      if (!ab_tvals.empty()) opt.t_values = ab_tvals;
      opt.demos_path = ab_demos.empty() ? "" : resolve_out(ab_demos);
      opt.jobs = jobs;
      std::string out = resolve_out(ab_out);
      ManifestGuard manifest(out + "/manifest.json", "ablate", cfg.to_json_string(), out);
      auto res = pipeline::ablate(opt, scen, cfg, out);
      manifest.finish("ok");
      std::cout << "rows " << res.rows << "\n" << res.summary_csv << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
