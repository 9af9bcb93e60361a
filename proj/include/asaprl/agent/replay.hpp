#pragma once

#include <Eigen/Dense>
#include <vector>

#include "asaprl/core/types.hpp"
#include "asaprl/util/rng.hpp"

namespace asaprl::agent {

/// Ring buffer of skill transitions (s, theta, r~, s', done). Observations
/// are stored raw (unscaled) in float; theta and reward keep full precision.
class ReplayBuffer {
 public:
  ReplayBuffer(int obs_dim, int capacity);

  void push(const Eigen::VectorXd& obs, const SkillParams& theta, double reward,
            const Eigen::VectorXd& next_obs, bool done);

  int size() const { return size_; }
  int capacity() const { return capacity_; }
  int obs_dim() const { return obs_dim_; }

  /// Uniform sample of `count` distinct indices (no replacement within a
  /// batch); deterministic given the rng state.
  std::vector<int> sample_indices(Rng& rng, int count) const;

  const Eigen::VectorXf obs(int i) const { return obs_.col(i); }
  const Eigen::VectorXf next_obs(int i) const { return next_obs_.col(i); }
  const SkillParams& theta(int i) const { return theta_[i]; }
  double reward(int i) const { return reward_[i]; }
  bool done(int i) const { return done_[i] != 0; }

 private:
  int obs_dim_;
  int capacity_;
  int size_ = 0;
  int head_ = 0;
  Eigen::MatrixXf obs_, next_obs_;
  std::vector<SkillParams> theta_;
  std::vector<double> reward_;
  std::vector<uint8_t> done_;
};

}  // namespace asaprl::agent
