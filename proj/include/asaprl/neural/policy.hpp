#pragma once

#include <Eigen/Dense>
#include <numbers>

#include "asaprl/core/types.hpp"
#include "asaprl/neural/mlp.hpp"

namespace asaprl::neural {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEps = 1e-6;
inline constexpr int kThetaDim = 4;

/// Squashed-Gaussian policy head on top of an Mlp with 2*kThetaDim outputs:
/// rows [0,4) are the mean, rows [4,8) the raw log-std, which is smoothly
/// squashed into [kLogStdMin, kLogStdMax].
template <typename Scalar>
struct PolicyHead {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Mat mean;     // 4 x B
  Mat log_std;  // squashed
  Mat sigma;
  Mat tanh_raw;  // tanh of raw log-std rows (kept for the chain rule)

  static PolicyHead from_output(const Mat& out) {
    PolicyHead h;
    const int B = static_cast<int>(out.cols());
    h.mean = out.topRows(kThetaDim);
    h.tanh_raw = out.bottomRows(kThetaDim).array().tanh().matrix();
    const Scalar mid = Scalar(0.5 * (kLogStdMax + kLogStdMin));
    const Scalar half = Scalar(0.5 * (kLogStdMax - kLogStdMin));
    h.log_std = (h.tanh_raw.array() * half + mid).matrix();
    h.sigma = h.log_std.array().exp().matrix();
    (void)B;
    return h;
  }

  /// d(log_std)/d(raw) factor per entry.
  Mat dlogstd_draw() const {
    const Scalar half = Scalar(0.5 * (kLogStdMax - kLogStdMin));
    return (half * (Scalar(1) - tanh_raw.array().square())).matrix();
  }

  /// Assemble the 8 x B gradient w.r.t. the network output from gradients
  /// w.r.t. mean and (squashed) log-std.
  Mat output_grad(const Mat& dmean, const Mat& dlogstd) const {
    Mat g(2 * kThetaDim, mean.cols());
    g.topRows(kThetaDim) = dmean;
    g.bottomRows(kThetaDim) = (dlogstd.array() * dlogstd_draw().array()).matrix();
    return g;
  }
};

/// Reparameterized squashed sample with its log-probability.
/// u = tanh(mean + sigma * noise); log-prob carries the tanh correction.
template <typename Scalar>
struct SquashedSample {
  using Mat = typename PolicyHead<Scalar>::Mat;
  using Vec = typename PolicyHead<Scalar>::Vec;

  Mat z;       // pre-squash
  Mat u;       // in (-1, 1)
  Vec log_prob;  // per batch column

  static SquashedSample from(const PolicyHead<Scalar>& h, const Mat& noise) {
    SquashedSample s;
    s.z = h.mean + (h.sigma.array() * noise.array()).matrix();
    s.u = s.z.array().tanh().matrix();
    const int B = static_cast<int>(s.z.cols());
    s.log_prob = Vec::Zero(B);
    const Scalar c = Scalar(0.5 * std::log(2.0 * std::numbers::pi));
    for (int j = 0; j < B; ++j) {
      Scalar lp = 0;
      for (int i = 0; i < kThetaDim; ++i) {
        Scalar n = noise(i, j);
        Scalar uu = s.u(i, j);
        lp += -Scalar(0.5) * n * n - h.log_std(i, j) - c -
              std::log(Scalar(1) - uu * uu + Scalar(kSquashEps));
      }
      s.log_prob(j) = lp;
    }
    return s;
  }

  /// d(log_prob_j)/d(mean_ij) and d(log_prob_j)/d(log_std_ij), each scaled by
  /// a per-sample coefficient. Used by every loss that contains c_j * log_prob_j.
  static void logprob_grads(const PolicyHead<Scalar>& h, const Mat& noise,
                            const SquashedSample& s, const Vec& coeff, Mat& dmean,
                            Mat& dlogstd) {
    const int B = static_cast<int>(s.z.cols());
    dmean.resize(kThetaDim, B);
    dlogstd.resize(kThetaDim, B);
    for (int j = 0; j < B; ++j) {
      for (int i = 0; i < kThetaDim; ++i) {
        Scalar uu = s.u(i, j);
        Scalar one_m_u2 = Scalar(1) - uu * uu;
        Scalar corr = Scalar(2) * uu * one_m_u2 / (one_m_u2 + Scalar(kSquashEps));
        dmean(i, j) = coeff(j) * corr;
        dlogstd(i, j) = coeff(j) * (-Scalar(1) + corr * h.sigma(i, j) * noise(i, j));
      }
    }
  }

  /// Gradient contribution through u itself (for losses that consume the
  /// action, e.g. a critic): given d(loss)/d(u), returns gradients w.r.t.
  /// mean and log-std via u = tanh(mean + sigma * noise).
  static void action_grads(const PolicyHead<Scalar>& h, const Mat& noise,
                           const SquashedSample& s, const Mat& dloss_du, Mat& dmean,
                           Mat& dlogstd) {
    Mat du_dz = (Scalar(1) - s.u.array().square()).matrix();
    dmean = (dloss_du.array() * du_dz.array()).matrix();
    dlogstd = (dmean.array() * h.sigma.array() * noise.array()).matrix();
  }
};

/// Log-density of the squashed Gaussian at a given action (column-wise),
/// together with its gradients w.r.t. mean and log-std. Used by behavior
/// cloning; z_t = atanh(u_t) is taken from the caller so the clamping policy
/// stays in one place.
template <typename Scalar>
void logprob_at(const PolicyHead<Scalar>& h, const typename PolicyHead<Scalar>::Mat& z_t,
                const typename PolicyHead<Scalar>::Mat& u_t,
                typename PolicyHead<Scalar>::Vec& log_prob,
                typename PolicyHead<Scalar>::Mat* dmean = nullptr,
                typename PolicyHead<Scalar>::Mat* dlogstd = nullptr) {
  using Mat = typename PolicyHead<Scalar>::Mat;
  const int B = static_cast<int>(z_t.cols());
  log_prob.resize(B);
  if (dmean) dmean->resize(kThetaDim, B);
  if (dlogstd) dlogstd->resize(kThetaDim, B);
  const Scalar c = Scalar(0.5 * std::log(2.0 * std::numbers::pi));
  for (int j = 0; j < B; ++j) {
    Scalar lp = 0;
    for (int i = 0; i < kThetaDim; ++i) {
      Scalar d = (z_t(i, j) - h.mean(i, j)) / h.sigma(i, j);
      Scalar uu = u_t(i, j);
      lp += -Scalar(0.5) * d * d - h.log_std(i, j) - c -
            std::log(Scalar(1) - uu * uu + Scalar(kSquashEps));
      if (dmean) (*dmean)(i, j) = d / h.sigma(i, j);
      if (dlogstd) (*dlogstd)(i, j) = d * d - Scalar(1);
    }
    log_prob(j) = lp;
  }
  (void)sizeof(Mat);
}

inline double atanh_clamped(double u) {
  u = clamp(u, -1.0 + kSquashEps, 1.0 - kSquashEps);
  return std::atanh(u);
}

/// Affine map from the squashed action cube [-1,1]^4 onto the skill bounds.
inline SkillParams scale_action(const Eigen::Vector4d& a, const SkillBounds& b) {
  SkillParams p;
  p.y_e = a(0) * b.y_max;
  p.phi_e = a(1) * b.phi_max;
  p.v_e = 0.5 * (a(2) + 1.0) * b.v_max;
  p.a_e = b.a_min + 0.5 * (a(3) + 1.0) * (b.a_max - b.a_min);
  return p;
}

inline Eigen::Vector4d unscale_action(const SkillParams& p, const SkillBounds& b) {
  Eigen::Vector4d a;
  a(0) = p.y_e / b.y_max;
  a(1) = p.phi_e / b.phi_max;
  a(2) = 2.0 * p.v_e / b.v_max - 1.0;
  a(3) = 2.0 * (p.a_e - b.a_min) / (b.a_max - b.a_min) - 1.0;
  return a;
}

/// Single-observation policy sample (the per-decision path in rollouts).
struct GaussianPolicyOutput {
  Eigen::Vector4d mean;
  Eigen::Vector4d log_std;
  Eigen::Vector4d pre_tanh;
  Eigen::Vector4d action;  // squashed, strictly inside (-1, 1)
  double log_prob = 0.0;
};

template <typename Scalar>
GaussianPolicyOutput sample_policy(Mlp<Scalar>& actor,
                                   const Eigen::Ref<const Eigen::VectorXd>& obs, Rng& rng,
                                   bool deterministic = false) {
  using Mat = typename Mlp<Scalar>::Mat;
  Mat x = obs.template cast<Scalar>();
  Mat out = actor.forward(x);
  PolicyHead<Scalar> h = PolicyHead<Scalar>::from_output(out);
  Mat noise(kThetaDim, 1);
  for (int i = 0; i < kThetaDim; ++i)
    noise(i, 0) = deterministic ? Scalar(0) : Scalar(rng.normal());
  auto s = SquashedSample<Scalar>::from(h, noise);

  GaussianPolicyOutput o;
  for (int i = 0; i < kThetaDim; ++i) {
    o.mean(i) = h.mean(i, 0);
    o.log_std(i) = h.log_std(i, 0);
    o.pre_tanh(i) = s.z(i, 0);
    o.action(i) = clamp(s.u(i, 0), -1.0 + 1e-12, 1.0 - 1e-12);
  }
  o.log_prob = s.log_prob(0);
  return o;
}

/// Independent recomputation of the log-probability from (mean, log_std,
/// pre_tanh); mirrors the sampling-path formula for self-consistency checks.
inline double log_prob_of(const Eigen::Vector4d& mean, const Eigen::Vector4d& log_std,
                          const Eigen::Vector4d& pre_tanh) {
  double lp = 0.0;
  for (int i = 0; i < kThetaDim; ++i) {
    double sigma = std::exp(log_std(i));
    double n = (pre_tanh(i) - mean(i)) / sigma;
    double u = std::tanh(pre_tanh(i));
    lp += -0.5 * n * n - log_std(i) - 0.5 * std::log(2.0 * std::numbers::pi) -
          std::log(1.0 - u * u + kSquashEps);
  }
  return lp;
}

}  // namespace asaprl::neural
