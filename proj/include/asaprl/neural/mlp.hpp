#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "asaprl/util/rng.hpp"

namespace asaprl::neural {

/// Fully connected network, tanh hidden activations, linear output.
/// forward() caches activations for the following backward() call. Templated
/// on scalar so training can run in float while gradient checks run in double.
template <typename Scalar>
struct Mlp {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Mat> w;  // w[l]: out x in
  std::vector<Vec> b;

  struct Grads {
    std::vector<Mat> dw;
    std::vector<Vec> db;
    void setZero() {
      for (auto& m : dw) m.setZero();
      for (auto& v : db) v.setZero();
    }
  };

  static Mlp random(const std::vector<int>& widths, Rng& rng) {
    if (widths.size() < 2) throw std::invalid_argument("Mlp needs at least two widths");
    Mlp net;
    for (size_t l = 0; l + 1 < widths.size(); ++l) {
      int in = widths[l], out = widths[l + 1];
      double limit = std::sqrt(6.0 / (in + out));
      Mat wm(out, in);
      for (int r = 0; r < out; ++r)
        for (int c = 0; c < in; ++c) wm(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
      net.w.push_back(std::move(wm));
      net.b.push_back(Vec::Zero(out));
    }
    return net;
  }

  int layers() const { return static_cast<int>(w.size()); }
  int input_dim() const { return static_cast<int>(w.front().cols()); }
  int output_dim() const { return static_cast<int>(w.back().rows()); }

  Grads zero_grads() const {
    Grads g;
    for (const auto& m : w) g.dw.push_back(Mat::Zero(m.rows(), m.cols()));
    for (const auto& v : b) g.db.push_back(Vec::Zero(v.size()));
    return g;
  }

  /// Columns are batch entries.
  Mat forward(const Mat& x) {
    if (x.rows() != w.front().cols()) throw std::invalid_argument("Mlp::forward: input dim");
    acts_.resize(w.size() + 1);
    acts_[0] = x;
    for (size_t l = 0; l < w.size(); ++l) {
      Mat z = (w[l] * acts_[l]).colwise() + b[l];
      acts_[l + 1] = (l + 1 < w.size()) ? z.array().tanh().matrix() : z;
    }
    return acts_.back();
  }

  Vec forward(const Vec& x) { return forward(Mat(x)); }

  /// Reverse-mode gradients of the last forward() pass; `gout` is d(loss)/
  /// d(output), same shape as the output. Accumulates into `g` and returns
  /// d(loss)/d(input).
  Mat backward(const Mat& gout, Grads& g) const {
    if (acts_.empty()) throw std::logic_error("Mlp::backward before forward");
    Mat delta = gout;
    for (int l = layers() - 1; l >= 0; --l) {
      g.dw[l] += delta * acts_[l].transpose();
      g.db[l] += delta.rowwise().sum();
      if (l > 0) {
        Mat back = w[l].transpose() * delta;
        delta = back.array() * (Scalar(1) - acts_[l].array().square());
      }
    }
    return w[0].transpose() * delta;  // delta is already the layer-0 pre-activation grad
  }

  template <typename F>
  void for_each_param(F f) {
    for (auto& m : w) f(m.data(), m.size());
    for (auto& v : b) f(v.data(), v.size());
  }
  int param_count() const {
    int n = 0;
    for (const auto& m : w) n += static_cast<int>(m.size());
    for (const auto& v : b) n += static_cast<int>(v.size());
    return n;
  }

  template <typename Other>
  static Mlp from(const Other& o) {
    Mlp net;
    for (const auto& m : o.w) net.w.push_back(m.template cast<Scalar>());
    for (const auto& v : o.b) net.b.push_back(v.template cast<Scalar>());
    return net;
  }

 private:
  std::vector<Mat> acts_;
};

/// Polyak blend: target <- m * net + (1 - m) * target.
template <typename Scalar>
void polyak_update(const Mlp<Scalar>& net, Mlp<Scalar>& target, Scalar m) {
  for (size_t l = 0; l < net.w.size(); ++l) {
    target.w[l] = m * net.w[l] + (Scalar(1) - m) * target.w[l];
    target.b[l] = m * net.b[l] + (Scalar(1) - m) * target.b[l];
  }
}

}  // namespace asaprl::neural
