#include "asaprl/agent/pretrain.hpp"

#include <cmath>
#include <stdexcept>

#include "asaprl/sim/env.hpp"

namespace asaprl::agent {

Eigen::VectorXd observation_scale(int k_nearest) {
  Eigen::VectorXd s(5 + 4 * k_nearest + 2);
  s(0) = 15.0;  // ego speed
  s(1) = 6.0;   // ego acceleration
  s(2) = 4.0;   // lateral offset
  s(3) = 1.0;   // heading error
  s(4) = 1.0;   // distance fraction
  for (int k = 0; k < k_nearest; ++k) {
    s(5 + 4 * k + 0) = 25.0;  // relative x (interaction range)
    s(5 + 4 * k + 1) = 8.0;   // relative y
    s(5 + 4 * k + 2) = 10.0;  // relative speed
    s(5 + 4 * k + 3) = 1.0;   // relative heading
  }
  s(5 + 4 * k_nearest + 0) = 1.0;
  s(5 + 4 * k_nearest + 1) = 1.0;
  return s;
}

namespace {

using MatF = neural::Mlp<float>::Mat;
using VecF = neural::Mlp<float>::Vec;

MatF noise_batch(Rng& rng, int cols) {
  MatF n(neural::kThetaDim, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < neural::kThetaDim; ++i) n(i, j) = static_cast<float>(rng.normal());
  return n;
}

std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = n - 1; i > 0; --i) std::swap(idx[i], idx[static_cast<int>(rng.uniform_int(0, i))]);
  return idx;
}

}  // namespace

PretrainActorResult pretrain_actor(const demo::SkillDataset& dtheta, const TrainConfig& cfg) {
  const SkillBounds bounds = dtheta.scenario.skill_bounds();

  std::vector<const demo::SkillRecord*> usable;
  for (const auto& r : dtheta.records) {
    if (!bounds.contains(r.theta, 1e-9))
      throw std::invalid_argument("pretrain_actor: record theta outside skill bounds");
    if (cfg.drop_flagged_records && r.flagged) continue;
    usable.push_back(&r);
  }
  if (usable.empty()) throw std::invalid_argument("pretrain_actor: no usable records");

  const int n = static_cast<int>(usable.size());
  const int obs_dim = static_cast<int>(usable.front()->obs.size());
  const Eigen::VectorXd scale = observation_scale(dtheta.scenario.k_nearest);
  if (scale.size() != obs_dim)
    throw std::invalid_argument("pretrain_actor: observation dim mismatch");

  MatF obs(obs_dim, n), u_t(neural::kThetaDim, n), z_t(neural::kThetaDim, n);
  for (int i = 0; i < n; ++i) {
    obs.col(i) = (usable[i]->obs.array() / scale.array()).cast<float>();
    Eigen::Vector4d u = neural::unscale_action(usable[i]->theta, bounds);
    for (int d = 0; d < neural::kThetaDim; ++d) {
      double uc = clamp(u(d), -1.0 + neural::kSquashEps, 1.0 - neural::kSquashEps);
      u_t(d, i) = static_cast<float>(uc);
      z_t(d, i) = static_cast<float>(std::atanh(uc));
    }
  }

  Rng split_rng = Rng::substream(cfg.seed, "bc-split");
  auto order = shuffled_indices(n, split_rng);
  int n_held = n >= 10 ? n / 10 : (n >= 2 ? 1 : 0);
  std::vector<int> train_idx(order.begin(), order.end() - n_held);
  std::vector<int> held_idx(order.end() - n_held, order.end());

  auto gather = [&](const std::vector<int>& ids, const MatF& src) {
    MatF out(src.rows(), ids.size());
    for (size_t c = 0; c < ids.size(); ++c) out.col(c) = src.col(ids[c]);
    return out;
  };
  MatF held_obs, held_u, held_z;
  if (!held_idx.empty()) {
    held_obs = gather(held_idx, obs);
    held_u = gather(held_idx, u_t);
    held_z = gather(held_idx, z_t);
  }

  std::vector<int> aw{obs_dim};
  aw.insert(aw.end(), cfg.hidden.begin(), cfg.hidden.end());
  aw.push_back(2 * neural::kThetaDim);
  Rng init_rng = Rng::substream(cfg.seed, "bc-init");
  PretrainActorResult res;
  res.actor = neural::Mlp<float>::random(aw, init_rng);

  auto heldout_ll = [&](neural::Mlp<float>& net) {
    if (held_idx.empty()) return 0.0;
    MatF out = net.forward(held_obs);
    auto h = neural::PolicyHead<float>::from_output(out);
    VecF lp;
    neural::logprob_at<float>(h, held_z, held_u, lp);
    return static_cast<double>(lp.mean());
  };
  res.heldout_ll_before = heldout_ll(res.actor);

  neural::MlpAdam<float> opt;
  opt.init(res.actor, static_cast<float>(cfg.lr_bc));
  Rng batch_rng = Rng::substream(cfg.seed, "bc-batch");
  Rng noise_rng = Rng::substream(cfg.seed, "bc-noise");
  const int batch = std::min<int>(cfg.batch_size, static_cast<int>(train_idx.size()));

  for (int it = 0; it < cfg.actor_pretrain_iters; ++it) {
    MatF bo(obs_dim, batch), bu(neural::kThetaDim, batch), bz(neural::kThetaDim, batch);
    for (int j = 0; j < batch; ++j) {
      int pick = train_idx[static_cast<size_t>(
          batch_rng.uniform_int(0, static_cast<int64_t>(train_idx.size()) - 1))];
      bo.col(j) = obs.col(pick);
      bu.col(j) = u_t.col(pick);
      bz.col(j) = z_t.col(pick);
    }
    auto grads = res.actor.zero_grads();
    float mean_lp = 0, mean_h = 0;
    float loss = bc_loss(res.actor, bo, bu, bz, static_cast<float>(cfg.bc_entropy_weight),
                         noise_batch(noise_rng, batch), grads, &mean_lp, &mean_h);
    opt.step(res.actor, grads);
    if (it % 100 == 0 || it + 1 == cfg.actor_pretrain_iters)
      res.curve.push_back({static_cast<double>(it), static_cast<double>(loss),
                           static_cast<double>(mean_h)});
  }
  res.heldout_ll_after = heldout_ll(res.actor);
  return res;
}

demo::SkillRewardDataset collect_skill_rollouts(neural::Mlp<float>& actor,
                                                const sim::ScenarioConfig& scenario,
                                                long n_steps, int skill_steps, uint64_t seed,
                                                uint64_t actor_hash,
                                                std::vector<sim::StepRecord>* step_log,
                                                double exploration_std) {
  demo::SkillRewardDataset out;
  out.scenario = scenario;
  out.seed = seed;
  out.skill_steps = skill_steps;
  out.actor_hash = actor_hash;

  const SkillBounds bounds = scenario.skill_bounds();
  const Eigen::VectorXd scale = observation_scale(scenario.k_nearest);
  sim::TrafficEnv env(scenario);
  if (step_log)
    env.set_step_sink([step_log](const sim::StepRecord& r) { step_log->push_back(r); });
  Rng noise_rng = Rng::substream(seed, "rollout-noise");

  long collected = 0;
  for (uint64_t ep = 0; collected < n_steps; ++ep) {
    uint64_t ep_seed = Rng::substream(seed, "rollout-episode", ep).next_u64();
    Eigen::VectorXd obs = env.reset(ep_seed);
    while (!env.done() && collected < n_steps) {
      Eigen::VectorXd scaled = obs.cwiseQuotient(scale);
      auto pol = neural::sample_policy(actor, scaled, noise_rng, false);
      if (exploration_std > 0.0) {
        for (int d = 0; d < neural::kThetaDim; ++d) {
          double sigma = std::exp(pol.log_std(d));
          if (sigma < exploration_std) {
            double n = (pol.pre_tanh(d) - pol.mean(d)) / sigma;
            pol.action(d) = clamp(std::tanh(pol.mean(d) + exploration_std * n),
                                  -1.0 + 1e-12, 1.0 - 1e-12);
          }
        }
      }
      SkillParams theta = neural::scale_action(pol.action, bounds);
      skill::Trajectory traj =
          skill::generate_skill(env.ego(), theta, bounds, skill_steps, scenario.dt);
      sim::StepOutcome o = env.step_skill(traj, &theta);

      demo::SkillRewardRecord rec;
      rec.obs = obs;
      rec.theta = theta;
      rec.reward = o.reward;
      rec.next_obs = o.observation;
      rec.done = o.done && env.cause() != sim::Cause::timeout;
      out.records.push_back(std::move(rec));

      collected += o.steps;
      obs = o.observation;
    }
  }
  return out;
}

PretrainCriticResult pretrain_critic(const demo::SkillRewardDataset& dthetap,
                                     neural::Mlp<float>& frozen_actor, const TrainConfig& cfg) {
  if (dthetap.records.empty()) throw std::invalid_argument("pretrain_critic: empty dataset");
  const SkillBounds bounds = dthetap.scenario.skill_bounds();
  const Eigen::VectorXd scale = observation_scale(dthetap.scenario.k_nearest);
  const int n = static_cast<int>(dthetap.records.size());
  const int obs_dim = static_cast<int>(dthetap.records.front().obs.size());

  MatF obs(obs_dim, n), next_obs(obs_dim, n), act(neural::kThetaDim, n);
  VecF reward(n), done(n);
  for (int i = 0; i < n; ++i) {
    const auto& r = dthetap.records[i];
    obs.col(i) = (r.obs.array() / scale.array()).cast<float>();
    next_obs.col(i) = (r.next_obs.array() / scale.array()).cast<float>();
    act.col(i) = neural::unscale_action(r.theta, bounds).cast<float>();
    reward(i) = static_cast<float>(r.reward);
    done(i) = r.done ? 1.0f : 0.0f;
  }

  std::vector<int> qw{obs_dim + neural::kThetaDim};
  qw.insert(qw.end(), cfg.hidden.begin(), cfg.hidden.end());
  qw.push_back(1);
  Rng init_rng = Rng::substream(cfg.seed, "critic-init");
  PretrainCriticResult res;
  res.q1 = neural::Mlp<float>::random(qw, init_rng);
  res.q2 = neural::Mlp<float>::random(qw, init_rng);
  neural::Mlp<float> q1_tgt = res.q1, q2_tgt = res.q2;

  neural::MlpAdam<float> opt1, opt2;
  opt1.init(res.q1, static_cast<float>(cfg.lr_critic));
  opt2.init(res.q2, static_cast<float>(cfg.lr_critic));

  Rng split_rng = Rng::substream(cfg.seed, "critic-split");
  auto order = shuffled_indices(n, split_rng);
  int n_held = n >= 10 ? n / 10 : 0;
  std::vector<int> train_idx(order.begin(), order.end() - n_held);
  std::vector<int> held_idx(order.end() - n_held, order.end());

  const float alpha = static_cast<float>(cfg.alpha_init);

  auto targets_for = [&](const std::vector<int>& ids, Rng& nrng) {
    MatF no(obs_dim, ids.size());
    VecF r(ids.size()), d(ids.size());
    for (size_t j = 0; j < ids.size(); ++j) {
      no.col(j) = next_obs.col(ids[j]);
      r(j) = reward(ids[j]);
      d(j) = done(ids[j]);
    }
    MatF out = frozen_actor.forward(no);
    auto h = neural::PolicyHead<float>::from_output(out);
    auto sample = neural::SquashedSample<float>::from(h, noise_batch(nrng, static_cast<int>(ids.size())));
    MatF x = critic_input<float>(no, sample.u);
    MatF q1v = q1_tgt.forward(x);
    MatF q2v = q2_tgt.forward(x);
    VecF y(ids.size());
    for (size_t j = 0; j < ids.size(); ++j) {
      float qmin = cfg.double_q ? std::min(q1v(0, j), q2v(0, j)) : q1v(0, j);
      y(j) = r(j) + static_cast<float>(cfg.gamma) * (1.0f - d(j)) *
                        (qmin - alpha * sample.log_prob(j));
    }
    return y;
  };

  auto heldout_td = [&](Rng nrng) {
    if (held_idx.empty()) return 0.0;
    VecF y = targets_for(held_idx, nrng);
    MatF ho(obs_dim, held_idx.size());
    MatF ha(neural::kThetaDim, held_idx.size());
    for (size_t j = 0; j < held_idx.size(); ++j) {
      ho.col(j) = obs.col(held_idx[j]);
      ha.col(j) = act.col(held_idx[j]);
    }
    auto grads = res.q1.zero_grads();
    return static_cast<double>(critic_loss(res.q1, critic_input<float>(ho, ha), y, grads));
  };
  res.heldout_td_before = heldout_td(Rng::substream(cfg.seed, "critic-held-noise"));

  Rng batch_rng = Rng::substream(cfg.seed, "critic-batch");
  Rng noise_rng = Rng::substream(cfg.seed, "critic-noise");
  const int batch = std::min<int>(cfg.batch_size, static_cast<int>(train_idx.size()));

  for (int it = 0; it < cfg.critic_pretrain_iters; ++it) {
    std::vector<int> ids(batch);
    for (int j = 0; j < batch; ++j)
      ids[j] = train_idx[static_cast<size_t>(
          batch_rng.uniform_int(0, static_cast<int64_t>(train_idx.size()) - 1))];
    VecF y = targets_for(ids, noise_rng);
    MatF bo(obs_dim, batch), ba(neural::kThetaDim, batch);
    for (int j = 0; j < batch; ++j) {
      bo.col(j) = obs.col(ids[j]);
      ba.col(j) = act.col(ids[j]);
    }
    MatF x = critic_input<float>(bo, ba);
    auto g1 = res.q1.zero_grads();
    float l1 = critic_loss(res.q1, x, y, g1);
    opt1.step(res.q1, g1);
    float l2 = 0;
    if (cfg.double_q) {
      auto g2 = res.q2.zero_grads();
      l2 = critic_loss(res.q2, x, y, g2);
      opt2.step(res.q2, g2);
    }
    neural::polyak_update(res.q1, q1_tgt, static_cast<float>(cfg.polyak));
    if (cfg.double_q) neural::polyak_update(res.q2, q2_tgt, static_cast<float>(cfg.polyak));
    if (it % 100 == 0 || it + 1 == cfg.critic_pretrain_iters)
      res.curve.push_back({static_cast<double>(it), static_cast<double>(l1 + l2)});
  }
  res.heldout_td_after = heldout_td(Rng::substream(cfg.seed, "critic-held-noise"));
  return res;
}

}  // namespace asaprl::agent
