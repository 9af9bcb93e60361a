#pragma once

#include <cmath>

#include "asaprl/neural/mlp.hpp"

namespace asaprl::neural {

/// Adaptive-moment state for one flat parameter block.
template <typename Scalar>
struct AdamState {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vec m, v;
  long step = 0;
  Scalar lr = Scalar(3e-4);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);

  void init(int n, Scalar learning_rate) {
    m = Vec::Zero(n);
    v = Vec::Zero(n);
    step = 0;
    lr = learning_rate;
  }
};

/// One bias-corrected adaptive-moment step on a raw parameter block.
template <typename Scalar>
void adam_step(AdamState<Scalar>& st, Scalar* params, const Scalar* grads, int n) {
  st.step += 1;
  const Scalar bc1 = Scalar(1) - std::pow(st.beta1, Scalar(st.step));
  const Scalar bc2 = Scalar(1) - std::pow(st.beta2, Scalar(st.step));
  for (int i = 0; i < n; ++i) {
    st.m(i) = st.beta1 * st.m(i) + (Scalar(1) - st.beta1) * grads[i];
    st.v(i) = st.beta2 * st.v(i) + (Scalar(1) - st.beta2) * grads[i] * grads[i];
    Scalar mhat = st.m(i) / bc1;
    Scalar vhat = st.v(i) / bc2;
    params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
  }
}

/// Optimizer bound to every tensor of one Mlp.
template <typename Scalar>
struct MlpAdam {
  std::vector<AdamState<Scalar>> states;

  void init(const Mlp<Scalar>& net, Scalar lr) {
    states.clear();
    for (const auto& m : net.w) {
      AdamState<Scalar> s;
      s.init(static_cast<int>(m.size()), lr);
      states.push_back(std::move(s));
    }
    for (const auto& v : net.b) {
      AdamState<Scalar> s;
      s.init(static_cast<int>(v.size()), lr);
      states.push_back(std::move(s));
    }
  }

  void step(Mlp<Scalar>& net, const typename Mlp<Scalar>::Grads& g) {
    size_t k = 0;
    for (size_t l = 0; l < net.w.size(); ++l, ++k)
      adam_step(states[k], net.w[l].data(), g.dw[l].data(), static_cast<int>(net.w[l].size()));
    for (size_t l = 0; l < net.b.size(); ++l, ++k)
      adam_step(states[k], net.b[l].data(), g.db[l].data(), static_cast<int>(net.b[l].size()));
  }
};

}  // namespace asaprl::neural
