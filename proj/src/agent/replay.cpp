#include "asaprl/agent/replay.hpp"

#include <stdexcept>
#include <unordered_set>

namespace asaprl::agent {

ReplayBuffer::ReplayBuffer(int obs_dim, int capacity)
    : obs_dim_(obs_dim), capacity_(capacity) {
  if (obs_dim < 1 || capacity < 1) throw std::invalid_argument("replay buffer shape");
  obs_.resize(obs_dim, capacity);
  next_obs_.resize(obs_dim, capacity);
  theta_.resize(capacity);
  reward_.resize(capacity);
  done_.resize(capacity);
}

void ReplayBuffer::push(const Eigen::VectorXd& obs, const SkillParams& theta, double reward,
                        const Eigen::VectorXd& next_obs, bool done) {
  if (obs.size() != obs_dim_ || next_obs.size() != obs_dim_)
    throw std::invalid_argument("replay push: observation dim mismatch");
  obs_.col(head_) = obs.cast<float>();
  next_obs_.col(head_) = next_obs.cast<float>();
  theta_[head_] = theta;
  reward_[head_] = reward;
  done_[head_] = done ? 1 : 0;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::vector<int> ReplayBuffer::sample_indices(Rng& rng, int count) const {
  if (count > size_) throw std::logic_error("replay sample: batch larger than buffer");
  // Floyd's algorithm: exactly `count` distinct draws.
  std::unordered_set<int> chosen;
  std::vector<int> out;
  out.reserve(count);
  for (int j = size_ - count; j < size_; ++j) {
    int t = static_cast<int>(rng.uniform_int(0, j));
    if (chosen.insert(t).second) {
      out.push_back(t);
    } else {
      chosen.insert(j);
      out.push_back(j);
    }
  }
  return out;
}

}  // namespace asaprl::agent
