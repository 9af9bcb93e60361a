#pragma once

#include "asaprl/neural/policy.hpp"

namespace asaprl::agent {

using neural::kThetaDim;
using neural::Mlp;
using neural::PolicyHead;
using neural::SquashedSample;

/// Stack observations and actions into critic input columns.
template <typename Scalar>
typename Mlp<Scalar>::Mat critic_input(const typename Mlp<Scalar>::Mat& obs,
                                       const typename Mlp<Scalar>::Mat& act) {
  typename Mlp<Scalar>::Mat x(obs.rows() + act.rows(), obs.cols());
  x.topRows(obs.rows()) = obs;
  x.bottomRows(act.rows()) = act;
  return x;
}

/// Behavior-cloning objective: maximize mean log pi(theta_t | s) plus an
/// entropy bonus estimated at a fresh reparameterized sample. Returns the
/// (minimized) loss and accumulates actor gradients.
template <typename Scalar>
Scalar bc_loss(Mlp<Scalar>& actor, const typename Mlp<Scalar>::Mat& obs,
               const typename Mlp<Scalar>::Mat& u_target,
               const typename Mlp<Scalar>::Mat& z_target, Scalar beta,
               const typename Mlp<Scalar>::Mat& noise, typename Mlp<Scalar>::Grads& grads,
               Scalar* mean_logp = nullptr, Scalar* mean_entropy = nullptr) {
  using Mat = typename Mlp<Scalar>::Mat;
  using Vec = typename Mlp<Scalar>::Vec;
  const int B = static_cast<int>(obs.cols());
  const Scalar invB = Scalar(1) / Scalar(B);

  Mat out = actor.forward(obs);
  PolicyHead<Scalar> h = PolicyHead<Scalar>::from_output(out);

  Vec lp_t;
  Mat dmean_t, dlogstd_t;
  neural::logprob_at<Scalar>(h, z_target, u_target, lp_t, &dmean_t, &dlogstd_t);

  auto sample = SquashedSample<Scalar>::from(h, noise);
  Vec coeff = Vec::Constant(B, beta * invB);  // +beta * mean(log pi(sample))
  Mat dmean_s, dlogstd_s;
  SquashedSample<Scalar>::logprob_grads(h, noise, sample, coeff, dmean_s, dlogstd_s);

  Scalar loss = -lp_t.mean() + beta * sample.log_prob.mean();
  Mat dmean = (-invB) * dmean_t + dmean_s;
  Mat dlogstd = (-invB) * dlogstd_t + dlogstd_s;
  actor.backward(h.output_grad(dmean, dlogstd), grads);

  if (mean_logp) *mean_logp = lp_t.mean();
  if (mean_entropy) *mean_entropy = -sample.log_prob.mean();
  return loss;
}

/// Half squared Bellman error against fixed targets for one critic.
template <typename Scalar>
Scalar critic_loss(Mlp<Scalar>& critic, const typename Mlp<Scalar>::Mat& input,
                   const typename Mlp<Scalar>::Vec& targets,
                   typename Mlp<Scalar>::Grads& grads) {
  using Mat = typename Mlp<Scalar>::Mat;
  using Vec = typename Mlp<Scalar>::Vec;
  const int B = static_cast<int>(input.cols());
  Mat q = critic.forward(input);
  Vec diff = q.row(0).transpose() - targets;
  Scalar loss = Scalar(0.5) * diff.squaredNorm() / Scalar(B);
  Mat gout = (diff / Scalar(B)).transpose();
  critic.backward(gout, grads);
  return loss;
}

/// Maximum-entropy policy-improvement objective (minimized):
///   mean(alpha * log pi(u~|s) - min_k Q_k(s, u~))
/// or with a pretrained-policy KL penalty replacing the entropy term.
template <typename Scalar>
struct ActorLossInfo {
  Scalar loss = 0;
  Scalar mean_logp = 0;      // E[log pi(u~|s)]
  Scalar mean_entropy = 0;   // single-sample estimate
  Scalar mean_q = 0;
};

template <typename Scalar>
ActorLossInfo<Scalar> actor_loss(Mlp<Scalar>& actor, Mlp<Scalar>& q1, Mlp<Scalar>* q2,
                                 const typename Mlp<Scalar>::Mat& obs,
                                 const typename Mlp<Scalar>::Mat& noise, Scalar alpha,
                                 typename Mlp<Scalar>::Grads& grads,
                                 Mlp<Scalar>* pretrained = nullptr, Scalar kl_weight = 0) {
  using Mat = typename Mlp<Scalar>::Mat;
  using Vec = typename Mlp<Scalar>::Vec;
  const int B = static_cast<int>(obs.cols());
  const Scalar invB = Scalar(1) / Scalar(B);

  Mat out = actor.forward(obs);
  PolicyHead<Scalar> h = PolicyHead<Scalar>::from_output(out);
  auto sample = SquashedSample<Scalar>::from(h, noise);

  Mat x = critic_input<Scalar>(obs, sample.u);
  Mat q1v = q1.forward(x);
  Mat q2v;
  if (q2) q2v = q2->forward(x);

  // per-sample min critic and the mask for routing gradients
  Vec qmin(B);
  std::vector<char> use_q1(B, 1);
  for (int j = 0; j < B; ++j) {
    Scalar a = q1v(0, j);
    Scalar b = q2 ? q2v(0, j) : a;
    qmin(j) = (!q2 || a <= b) ? a : b;
    use_q1[j] = (!q2 || a <= b) ? 1 : 0;
  }

  const bool kl_mode = pretrained != nullptr;
  ActorLossInfo<Scalar> info;
  info.mean_logp = sample.log_prob.mean();
  info.mean_entropy = -info.mean_logp;
  info.mean_q = qmin.mean();

  Scalar reg_coeff = kl_mode ? kl_weight : alpha;
  info.loss = reg_coeff * info.mean_logp - info.mean_q;

  // gradient through log pi (reparameterized)
  Vec coeff = Vec::Constant(B, reg_coeff * invB);
  Mat dmean, dlogstd;
  SquashedSample<Scalar>::logprob_grads(h, noise, sample, coeff, dmean, dlogstd);

  // gradient through the critic input (actions only)
  Mat gout1 = Mat::Zero(1, B);
  Mat gout2 = Mat::Zero(1, B);
  for (int j = 0; j < B; ++j) (use_q1[j] ? gout1 : gout2)(0, j) = -invB;
  typename Mlp<Scalar>::Grads scratch1 = q1.zero_grads();
  Mat din = q1.backward(gout1, scratch1);
  if (q2) {
    typename Mlp<Scalar>::Grads scratch2 = q2->zero_grads();
    din += q2->backward(gout2, scratch2);
  }
  Mat dloss_du = din.bottomRows(kThetaDim);

  if (kl_mode) {
    // KL(pi || pi_pre) estimated at the sample: log pi - log pi_pre. The
    // first term is covered above; the second flows only through u.
    Mat pre_out = pretrained->forward(obs);
    PolicyHead<Scalar> hp = PolicyHead<Scalar>::from_output(pre_out);
    Vec lp_pre;
    neural::logprob_at<Scalar>(hp, sample.z, sample.u, lp_pre);
    info.loss -= kl_weight * lp_pre.mean();
    for (int j = 0; j < B; ++j) {
      for (int i = 0; i < kThetaDim; ++i) {
        Scalar uu = sample.u(i, j);
        Scalar one_m_u2 = Scalar(1) - uu * uu;
        Scalar d = (sample.z(i, j) - hp.mean(i, j)) / hp.sigma(i, j);
        Scalar dlp_du = -d / (hp.sigma(i, j) * one_m_u2) + Scalar(2) * uu / (one_m_u2 + Scalar(neural::kSquashEps));
        dloss_du(i, j) += -kl_weight * invB * dlp_du;
      }
    }
  }

  Mat dmean_u, dlogstd_u;
  SquashedSample<Scalar>::action_grads(h, noise, sample, dloss_du, dmean_u, dlogstd_u);
  actor.backward(h.output_grad(dmean + dmean_u, dlogstd + dlogstd_u), grads);
  return info;
}

/// Temperature objective alpha * (H_est - delta). The returned gradient is
/// taken with respect to alpha itself and the caller applies it to the
/// log-alpha parameter, which keeps the controller responsive at small
/// temperatures.
template <typename Scalar>
Scalar alpha_loss(Scalar log_alpha, Scalar mean_entropy, Scalar target_entropy,
                  Scalar& dloss_dalpha) {
  Scalar alpha = std::exp(log_alpha);
  dloss_dalpha = mean_entropy - target_entropy;
  return alpha * (mean_entropy - target_entropy);
}

}  // namespace asaprl::agent
