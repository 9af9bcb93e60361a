#pragma once

#include <string>

#include "asaprl/neural/mlp.hpp"

namespace asaprl::neural {

/// Checkpoint container: layer shapes plus float32 payload (little-endian,
/// column-major per tensor). Save/load of the same checkpoint is bit-exact.
struct Checkpoint {
  std::vector<uint32_t> rows;
  std::vector<uint32_t> cols;
  std::vector<std::vector<float>> weights;  // column-major
  std::vector<std::vector<float>> biases;

  template <typename Scalar>
  static Checkpoint from(const Mlp<Scalar>& net) {
    Checkpoint c;
    for (size_t l = 0; l < net.w.size(); ++l) {
      c.rows.push_back(static_cast<uint32_t>(net.w[l].rows()));
      c.cols.push_back(static_cast<uint32_t>(net.w[l].cols()));
      auto wf = net.w[l].template cast<float>().eval();
      auto bf = net.b[l].template cast<float>().eval();
      c.weights.emplace_back(wf.data(), wf.data() + wf.size());
      c.biases.emplace_back(bf.data(), bf.data() + bf.size());
    }
    return c;
  }

  template <typename Scalar>
  Mlp<Scalar> to_mlp() const {
    Mlp<Scalar> net;
    for (size_t l = 0; l < rows.size(); ++l) {
      Eigen::MatrixXf wf = Eigen::Map<const Eigen::MatrixXf>(weights[l].data(), rows[l], cols[l]);
      Eigen::VectorXf bf = Eigen::Map<const Eigen::VectorXf>(biases[l].data(), rows[l]);
      net.w.push_back(wf.cast<Scalar>());
      net.b.push_back(bf.cast<Scalar>());
    }
    return net;
  }
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// FNV-1a hash of a file's bytes; used for dataset provenance stamps.
uint64_t file_hash(const std::string& path);

}  // namespace asaprl::neural
