#include "asaprl/agent/evaluate.hpp"

#include <future>

namespace asaprl::agent {

namespace {

sim::EpisodeMetrics run_episode(neural::Mlp<float>& actor, const sim::ScenarioConfig& scenario,
                                int skill_steps, uint64_t ep_seed) {
  const SkillBounds bounds = scenario.skill_bounds();
  const Eigen::VectorXd scale = observation_scale(scenario.k_nearest);
  sim::TrafficEnv env(scenario);
  Eigen::VectorXd obs = env.reset(ep_seed);
  Rng unused(0);  // deterministic mode draws no noise
  while (!env.done()) {
    Eigen::VectorXd scaled = obs.cwiseQuotient(scale);
    auto pol = neural::sample_policy(actor, scaled, unused, true);
    SkillParams theta = neural::scale_action(pol.action, bounds);
    skill::Trajectory traj =
        skill::generate_skill(env.ego(), theta, bounds, skill_steps, scenario.dt);
    sim::StepOutcome o = env.step_skill(traj, &theta);
    obs = std::move(o.observation);
  }
  return env.episode_metrics();
}

}  // namespace

EvalSummary evaluate(const neural::Mlp<float>& actor, const sim::ScenarioConfig& scenario,
                     int skill_steps, int n_episodes, uint64_t seed, int jobs) {
  EvalSummary s;
  s.episodes = n_episodes;
  if (n_episodes <= 0) return s;
  s.per_episode.resize(n_episodes);

  auto worker = [&](int lo, int hi) {
    neural::Mlp<float> local = actor;  // forward() caches are per-instance
    for (int i = lo; i < hi; ++i) {
      uint64_t ep_seed = Rng::substream(seed, "eval-episode", static_cast<uint64_t>(i)).next_u64();
      s.per_episode[i] = run_episode(local, scenario, skill_steps, ep_seed);
    }
  };

  if (jobs <= 1) {
    worker(0, n_episodes);
  } else {
    std::vector<std::future<void>> futs;
    int chunk = (n_episodes + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
      int lo = w * chunk, hi = std::min(n_episodes, lo + chunk);
      if (lo >= hi) break;
      futs.push_back(std::async(std::launch::async, worker, lo, hi));
    }
    for (auto& f : futs) f.get();
  }

  for (const auto& m : s.per_episode) {
    s.mean_reward += m.episode_reward;
    s.success_rate += m.success ? 1.0 : 0.0;
    s.mean_completion += m.completion;
    s.collision_rate += m.collision ? 1.0 : 0.0;
    s.mean_passed_cars += m.passed_cars;
  }
  s.mean_reward /= n_episodes;
  s.success_rate /= n_episodes;
  s.mean_completion /= n_episodes;
  s.collision_rate /= n_episodes;
  s.mean_passed_cars /= n_episodes;
  return s;
}

}  // namespace asaprl::agent
