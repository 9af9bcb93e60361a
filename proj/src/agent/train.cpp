#include "asaprl/agent/train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "asaprl/agent/replay.hpp"
#include "asaprl/neural/checkpoint.hpp"
#include "asaprl/sim/env.hpp"

namespace asaprl::agent {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(PriorMode m) {
  switch (m) {
    case PriorMode::no_prior: return "no_prior";
    case PriorMode::bc_only: return "bc_only";
    case PriorMode::init_actor: return "init_actor";
    case PriorMode::kl_init_actor: return "kl_init_actor";
    case PriorMode::double_init: return "double_init";
  }
  return "no_prior";
}

PriorMode prior_mode_from_string(const std::string& s) {
  if (s == "no_prior") return PriorMode::no_prior;
  if (s == "bc_only") return PriorMode::bc_only;
  if (s == "init_actor") return PriorMode::init_actor;
  if (s == "kl_init_actor") return PriorMode::kl_init_actor;
  if (s == "double_init") return PriorMode::double_init;
  throw std::invalid_argument("unknown prior mode: " + s);
}

std::string TrainConfig::to_json_string() const {
  json j;
  j["gamma"] = gamma;
  j["alpha_init"] = alpha_init;
  j["target_entropy"] = target_entropy;
  j["lr_actor"] = lr_actor;
  j["lr_critic"] = lr_critic;
  j["lr_alpha"] = lr_alpha;
  j["lr_bc"] = lr_bc;
  j["polyak"] = polyak;
  j["bc_entropy_weight"] = bc_entropy_weight;
  j["skill_steps"] = skill_steps;
  j["batch_size"] = batch_size;
  j["replay_capacity"] = replay_capacity;
  j["update_start"] = update_start;
  j["actor_pretrain_iters"] = actor_pretrain_iters;
  j["rollout_steps"] = rollout_steps;
  j["critic_pretrain_iters"] = critic_pretrain_iters;
  j["rollout_exploration_std"] = rollout_exploration_std;
  j["total_env_steps"] = total_env_steps;
  j["eval_interval_steps"] = eval_interval_steps;
  j["eval_episodes"] = eval_episodes;
  j["prior_mode"] = to_string(prior_mode);
  j["kl_weight"] = kl_weight;
  j["double_q"] = double_q;
  j["paper_sign_target"] = paper_sign_target;
  j["drop_flagged_records"] = drop_flagged_records;
  j["hidden"] = hidden;
  j["seed"] = seed;
  return j.dump();
}

TrainConfig TrainConfig::from_json_string(const std::string& text) {
  json j = json::parse(text);
  TrainConfig c;
  auto get = [&](const char* k, auto& dst) {
    if (j.contains(k)) dst = j[k].get<std::decay_t<decltype(dst)>>();
  };
  get("gamma", c.gamma);
  get("alpha_init", c.alpha_init);
  get("target_entropy", c.target_entropy);
  get("lr_actor", c.lr_actor);
  get("lr_critic", c.lr_critic);
  get("lr_alpha", c.lr_alpha);
  get("lr_bc", c.lr_bc);
  get("polyak", c.polyak);
  get("bc_entropy_weight", c.bc_entropy_weight);
  get("skill_steps", c.skill_steps);
  get("batch_size", c.batch_size);
  get("replay_capacity", c.replay_capacity);
  get("update_start", c.update_start);
  get("actor_pretrain_iters", c.actor_pretrain_iters);
  get("rollout_steps", c.rollout_steps);
  get("critic_pretrain_iters", c.critic_pretrain_iters);
  get("rollout_exploration_std", c.rollout_exploration_std);
  get("total_env_steps", c.total_env_steps);
  get("eval_interval_steps", c.eval_interval_steps);
  get("eval_episodes", c.eval_episodes);
  if (j.contains("prior_mode")) c.prior_mode = prior_mode_from_string(j["prior_mode"]);
  get("kl_weight", c.kl_weight);
  get("double_q", c.double_q);
  get("paper_sign_target", c.paper_sign_target);
  get("drop_flagged_records", c.drop_flagged_records);
  get("hidden", c.hidden);
  get("seed", c.seed);
  if (!(c.gamma > 0.0 && c.gamma <= 1.0) || !(c.polyak > 0.0 && c.polyak <= 1.0) ||
      c.skill_steps < 1)
    throw std::invalid_argument("invalid train config values");
  return c;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& pts) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write curve csv: " + path);
  out << "iteration,env_steps,reward,success_rate,completion,collision_rate,passed_cars,"
         "alpha,entropy,critic_loss,actor_loss,mean_q\n";
  for (const auto& p : pts) {
    out << p.iteration << "," << p.env_steps << "," << fmt(p.eval.mean_reward) << ","
        << fmt(p.eval.success_rate) << "," << fmt(p.eval.mean_completion) << ","
        << fmt(p.eval.collision_rate) << "," << fmt(p.eval.mean_passed_cars) << ","
        << fmt(p.alpha) << "," << fmt(p.entropy) << "," << fmt(p.critic_loss) << ","
        << fmt(p.actor_loss) << "," << fmt(p.mean_q) << "\n";
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const sim::ScenarioConfig& scenario,
                  const TrainInputs& inputs, const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream echo(out_dir + "/run_config.json");
    echo << json{{"train", json::parse(cfg.to_json_string())},
                 {"scenario", json::parse(scenario.to_json_string())}}
                .dump(2)
         << "\n";
  }

  TrainResult result;
  sim::TrafficEnv env(scenario);
  const int obs_dim = env.obs_dim();
  const SkillBounds bounds = scenario.skill_bounds();
  const Eigen::VectorXd scale = observation_scale(scenario.k_nearest);

  Rng init_rng = Rng::substream(cfg.seed, "net-init");
  auto nets = SacNets<float>::make(obs_dim, cfg.hidden, static_cast<float>(cfg.alpha_init),
                                   init_rng);

  auto load_net = [&](const std::string& path) {
    result.files_read.push_back(path);
    return neural::load_checkpoint(path).to_mlp<float>();
  };

  const bool wants_actor = cfg.prior_mode != PriorMode::no_prior;
  if (wants_actor) {
    if (inputs.actor_checkpoint.empty())
      throw std::invalid_argument("prior mode " + to_string(cfg.prior_mode) +
                                  " requires an actor checkpoint");
    nets.actor = load_net(inputs.actor_checkpoint);
    if (cfg.prior_mode == PriorMode::kl_init_actor) nets.pretrained_actor = nets.actor;
  }
  if (cfg.prior_mode == PriorMode::double_init) {
    if (inputs.critic1_checkpoint.empty() || inputs.critic2_checkpoint.empty())
      throw std::invalid_argument("double_init requires critic checkpoints");
    nets.q1 = load_net(inputs.critic1_checkpoint);
    nets.q2 = load_net(inputs.critic2_checkpoint);
    nets.q1_tgt = nets.q1;
    nets.q2_tgt = nets.q2;
  }

  SacOptimizers<float> opt;
  opt.init(nets, static_cast<float>(cfg.lr_actor), static_cast<float>(cfg.lr_critic));
  ReplayBuffer replay(obs_dim, cfg.replay_capacity);

  Rng sample_rng = Rng::substream(cfg.seed, "sampling");
  Rng update_rng = Rng::substream(cfg.seed, "updates");

  std::vector<CurvePoint> curve;
  long eval_round = 0;
  SacUpdateStats<float> last_stats;
  last_stats.alpha = static_cast<float>(cfg.alpha_init);
  auto run_eval = [&](long env_steps, long iters) {
    uint64_t eval_seed = Rng::substream(cfg.seed, "eval", static_cast<uint64_t>(eval_round)).next_u64();
    ++eval_round;
    CurvePoint p;
    p.iteration = iters;
    p.env_steps = env_steps;
    p.eval = evaluate(nets.actor, scenario, cfg.skill_steps, cfg.eval_episodes, eval_seed);
    p.alpha = last_stats.alpha;
    p.entropy = last_stats.entropy;
    p.critic_loss = last_stats.critic_loss;
    p.actor_loss = last_stats.actor_loss;
    p.mean_q = last_stats.mean_q;
    curve.push_back(p);
    return p.eval;
  };

  auto dump_nan_diag = [&](long env_steps, long iters, const SacUpdateStats<float>& st) {
    std::ofstream diag(out_dir + "/nan_diagnostic.json");
    diag << json{{"env_steps", env_steps},
                 {"gradient_steps", iters},
                 {"critic_loss", static_cast<double>(st.critic_loss)},
                 {"actor_loss", static_cast<double>(st.actor_loss)},
                 {"alpha", static_cast<double>(st.alpha)},
                 {"entropy", static_cast<double>(st.entropy)},
                 {"mean_q", static_cast<double>(st.mean_q)},
                 {"mean_target", static_cast<double>(st.mean_target)}}
                .dump(2)
         << "\n";
  };

  long env_steps = 0;
  long gradient_steps = 0;
  run_eval(0, 0);

  if (cfg.prior_mode == PriorMode::bc_only) {
    // evaluation-only mode: no environment interaction, no updates
    for (long s = cfg.eval_interval_steps; s <= cfg.total_env_steps;
         s += cfg.eval_interval_steps)
      run_eval(s, 0);
  } else {
    long next_eval = cfg.eval_interval_steps;
    uint64_t episode = 0;
    while (env_steps < cfg.total_env_steps) {
      uint64_t ep_seed = Rng::substream(cfg.seed, "train-env", episode).next_u64();
      ++episode;
      Eigen::VectorXd obs = env.reset(ep_seed);
      while (!env.done() && env_steps < cfg.total_env_steps) {
        Eigen::VectorXd scaled = obs.cwiseQuotient(scale);
        auto pol = neural::sample_policy(nets.actor, scaled, sample_rng, false);
        SkillParams theta = neural::scale_action(pol.action, bounds);
        skill::Trajectory traj =
            skill::generate_skill(env.ego(), theta, bounds, cfg.skill_steps, scenario.dt);
        sim::StepOutcome o = env.step_skill(traj, &theta);
        bool mdp_done = o.done && env.cause() != sim::Cause::timeout;
        replay.push(obs, theta, o.reward, o.observation, mdp_done);
        env_steps += o.steps;
        obs = std::move(o.observation);

        if (replay.size() >= cfg.batch_size && env_steps >= cfg.update_start) {
          auto ids = replay.sample_indices(update_rng, cfg.batch_size);
          Batch<float> batch;
          batch.obs.resize(obs_dim, cfg.batch_size);
          batch.next_obs.resize(obs_dim, cfg.batch_size);
          batch.act_u.resize(neural::kThetaDim, cfg.batch_size);
          batch.reward.resize(cfg.batch_size);
          batch.done.resize(cfg.batch_size);
          Eigen::VectorXf scale_f = scale.cast<float>();
          for (int j = 0; j < cfg.batch_size; ++j) {
            batch.obs.col(j) = replay.obs(ids[j]).cwiseQuotient(scale_f);
            batch.next_obs.col(j) = replay.next_obs(ids[j]).cwiseQuotient(scale_f);
            batch.act_u.col(j) = neural::unscale_action(replay.theta(ids[j]), bounds).cast<float>();
            batch.reward(j) = static_cast<float>(replay.reward(ids[j]));
            batch.done(j) = replay.done(ids[j]) ? 1.0f : 0.0f;
          }
          auto st = sac_update(nets, opt, batch, cfg, update_rng);
          last_stats = st;
          ++gradient_steps;
          if (!std::isfinite(st.critic_loss) || !std::isfinite(st.actor_loss) ||
              !std::isfinite(st.alpha)) {
            dump_nan_diag(env_steps, gradient_steps, st);
            throw std::runtime_error("non-finite loss; diagnostic written to " + out_dir);
          }
        }
        while (env_steps >= next_eval && next_eval <= cfg.total_env_steps) {
          run_eval(next_eval, gradient_steps);
          next_eval += cfg.eval_interval_steps;
        }
      }
    }
  }

  result.env_steps = env_steps;
  result.gradient_steps = gradient_steps;
  result.final_eval = curve.back().eval;

  result.curve_csv = out_dir + "/curve.csv";
  write_curve_csv(result.curve_csv, curve);
  result.actor_checkpoint = out_dir + "/actor.ckpt";
  result.critic1_checkpoint = out_dir + "/critic1.ckpt";
  result.critic2_checkpoint = out_dir + "/critic2.ckpt";
  neural::save_checkpoint(neural::Checkpoint::from(nets.actor), result.actor_checkpoint);
  neural::save_checkpoint(neural::Checkpoint::from(nets.q1), result.critic1_checkpoint);
  neural::save_checkpoint(neural::Checkpoint::from(nets.q2), result.critic2_checkpoint);
  return result;
}

}  // namespace asaprl::agent
