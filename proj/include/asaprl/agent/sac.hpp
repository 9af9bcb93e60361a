#pragma once

#include <optional>

#include "asaprl/agent/config.hpp"
#include "asaprl/agent/losses.hpp"
#include "asaprl/neural/adam.hpp"

namespace asaprl::agent {

template <typename Scalar>
struct Batch {
  using Mat = typename Mlp<Scalar>::Mat;
  using Vec = typename Mlp<Scalar>::Vec;
  Mat obs;       // scaled observations, dim x B
  Mat act_u;     // actions in the squashed cube, 4 x B
  Vec reward;    // T-step skill reward sums
  Mat next_obs;  // scaled
  Vec done;      // 1 = MDP-terminal (crash/success), 0 otherwise
};

template <typename Scalar>
struct SacNets {
  Mlp<Scalar> actor, q1, q2, q1_tgt, q2_tgt;
  Scalar log_alpha = Scalar(0);
  std::optional<Mlp<Scalar>> pretrained_actor;  // kl_init_actor reference

  static SacNets make(int obs_dim, const std::vector<int>& hidden, Scalar alpha_init,
                      Rng& rng) {
    std::vector<int> aw{obs_dim};
    aw.insert(aw.end(), hidden.begin(), hidden.end());
    aw.push_back(2 * kThetaDim);
    std::vector<int> qw{obs_dim + kThetaDim};
    qw.insert(qw.end(), hidden.begin(), hidden.end());
    qw.push_back(1);
    SacNets n;
    n.actor = Mlp<Scalar>::random(aw, rng);
    n.q1 = Mlp<Scalar>::random(qw, rng);
    n.q2 = Mlp<Scalar>::random(qw, rng);
    n.q1_tgt = n.q1;
    n.q2_tgt = n.q2;
    n.log_alpha = std::log(alpha_init);
    return n;
  }
};

template <typename Scalar>
struct SacOptimizers {
  neural::MlpAdam<Scalar> actor, q1, q2;
  void init(const SacNets<Scalar>& n, Scalar lr_actor, Scalar lr_critic) {
    actor.init(n.actor, lr_actor);
    q1.init(n.q1, lr_critic);
    q2.init(n.q2, lr_critic);
  }
};

template <typename Scalar>
struct SacUpdateStats {
  Scalar critic_loss = 0;
  Scalar actor_loss = 0;
  Scalar alpha = 0;
  Scalar entropy = 0;  // single-sample estimate at the actor update
  Scalar mean_q = 0;
  Scalar mean_target = 0;
};

/// Soft targets for a batch: r + gamma * (1-done) * (minQ' - alpha*logpi').
/// The paper_sign flag flips the regularizer sign to match the literal
/// printed update (for side-by-side comparison runs).
template <typename Scalar>
typename Mlp<Scalar>::Vec soft_targets(SacNets<Scalar>& nets, const Batch<Scalar>& batch,
                                       const TrainConfig& cfg,
                                       const typename Mlp<Scalar>::Mat& noise) {
  using Mat = typename Mlp<Scalar>::Mat;
  using Vec = typename Mlp<Scalar>::Vec;
  const int B = static_cast<int>(batch.obs.cols());

  Mat out = nets.actor.forward(batch.next_obs);
  PolicyHead<Scalar> h = PolicyHead<Scalar>::from_output(out);
  auto sample = SquashedSample<Scalar>::from(h, noise);

  Mat x = critic_input<Scalar>(batch.next_obs, sample.u);
  Mat q1v = nets.q1_tgt.forward(x);
  Mat q2v;
  if (cfg.double_q) q2v = nets.q2_tgt.forward(x);

  Vec reg = sample.log_prob;  // log pi(u'|s')
  if (nets.pretrained_actor && cfg.prior_mode == PriorMode::kl_init_actor) {
    Mat pre_out = nets.pretrained_actor->forward(batch.next_obs);
    PolicyHead<Scalar> hp = PolicyHead<Scalar>::from_output(pre_out);
    Vec lp_pre;
    neural::logprob_at<Scalar>(hp, sample.z, sample.u, lp_pre);
    reg = (sample.log_prob - lp_pre);  // single-sample KL estimate
  }

  const Scalar alpha = std::exp(nets.log_alpha);
  const Scalar w = (nets.pretrained_actor && cfg.prior_mode == PriorMode::kl_init_actor)
                       ? Scalar(cfg.kl_weight)
                       : alpha;
  const Scalar sign = cfg.paper_sign_target ? Scalar(-1) : Scalar(1);

  Vec y(B);
  for (int j = 0; j < B; ++j) {
    Scalar qmin = cfg.double_q ? std::min(q1v(0, j), q2v(0, j)) : q1v(0, j);
    Scalar soft = qmin - sign * w * reg(j);
    y(j) = batch.reward(j) + Scalar(cfg.gamma) * (Scalar(1) - batch.done(j)) * soft;
  }
  return y;
}

/// One full SAC step: critic(s), actor, temperature, target blend.
template <typename Scalar>
SacUpdateStats<Scalar> sac_update(SacNets<Scalar>& nets, SacOptimizers<Scalar>& opt,
                                  const Batch<Scalar>& batch, const TrainConfig& cfg,
                                  Rng& rng) {
  using Mat = typename Mlp<Scalar>::Mat;
  const int B = static_cast<int>(batch.obs.cols());
  const bool kl_mode = cfg.prior_mode == PriorMode::kl_init_actor && nets.pretrained_actor;

  auto draw_noise = [&](int cols) {
    Mat n(kThetaDim, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < kThetaDim; ++i) n(i, j) = Scalar(rng.normal());
    return n;
  };

  SacUpdateStats<Scalar> stats;

  // critic step
  auto y = soft_targets(nets, batch, cfg, draw_noise(B));
  stats.mean_target = y.mean();
  Mat x = critic_input<Scalar>(batch.obs, batch.act_u);
  auto g1 = nets.q1.zero_grads();
  Scalar l1 = critic_loss(nets.q1, x, y, g1);
  opt.q1.step(nets.q1, g1);
  Scalar l2 = 0;
  if (cfg.double_q) {
    auto g2 = nets.q2.zero_grads();
    l2 = critic_loss(nets.q2, x, y, g2);
    opt.q2.step(nets.q2, g2);
  }
  stats.critic_loss = l1 + l2;

  // actor step
  auto ga = nets.actor.zero_grads();
  auto info = actor_loss<Scalar>(nets.actor, nets.q1, cfg.double_q ? &nets.q2 : nullptr,
                                 batch.obs, draw_noise(B), std::exp(nets.log_alpha), ga,
                                 kl_mode ? &*nets.pretrained_actor : nullptr,
                                 Scalar(cfg.kl_weight));
  opt.actor.step(nets.actor, ga);
  stats.actor_loss = info.loss;
  stats.entropy = info.mean_entropy;
  stats.mean_q = info.mean_q;

  // temperature step (plain gradient on log alpha); disabled in KL mode
  if (!kl_mode) {
    Scalar dla;
    alpha_loss<Scalar>(nets.log_alpha, info.mean_entropy, Scalar(cfg.target_entropy), dla);
    nets.log_alpha -= Scalar(cfg.lr_alpha) * dla;
  }
  stats.alpha = std::exp(nets.log_alpha);

  // target blend
  polyak_update(nets.q1, nets.q1_tgt, Scalar(cfg.polyak));
  if (cfg.double_q) polyak_update(nets.q2, nets.q2_tgt, Scalar(cfg.polyak));
  return stats;
}

/// Fixed scaling applied to raw observations before they reach any network.
Eigen::VectorXd observation_scale(int k_nearest);

}  // namespace asaprl::agent
