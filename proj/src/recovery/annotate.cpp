#include "asaprl/recovery/annotate.hpp"

#include <cmath>
#include <future>
#include <json.hpp>

#include "asaprl/sim/env.hpp"

namespace asaprl::recovery {

namespace {

constexpr double kHistEdges[8] = {1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.5, 1.0, 1e300};

struct SegmentTask {
  int traj_index;
  int seg_index;
  Eigen::VectorXd obs;
  Segment segment;
};

}  // namespace

std::string RecoveryReport::to_json_string() const {
  nlohmann::json j;
  j["segments"] = segments;
  j["converged"] = converged;
  j["flagged"] = flagged;
  j["convergence_rate"] = convergence_rate();
  j["mean_residual"] = mean_residual;
  j["residual_histogram"] = {{"edges", std::vector<double>(kHistEdges, kHistEdges + 7)},
                             {"counts", std::vector<double>(residual_histogram,
                                                            residual_histogram + 8)}};
  return j.dump(2);
}

demo::SkillDataset annotate_demonstrations(const demo::ControlDemoSet& demos,
                                           const SkillBounds& bounds, int skill_steps,
                                           const AnnotateOptions& opt,
                                           RecoveryReport* report) {
  demo::SkillDataset out;
  out.scenario = demos.scenario;
  out.seed = demos.seed;
  out.skill_steps = skill_steps;
  out.weights = opt.recovery.weights;

  const double dt = demos.scenario.dt;
  const int stride = std::max(opt.segment_stride, 1);

  // Replay each trajectory with the ego following the recorded states (the
  // recorded controls are not consulted) so observations line up with
  // decision points under the same traffic evolution.
  std::vector<SegmentTask> tasks;
  sim::TrafficEnv env(demos.scenario);
  for (size_t ti = 0; ti < demos.trajectories.size(); ++ti) {
    const auto& traj = demos.trajectories[ti];
    if (traj.steps.size() < static_cast<size_t>(skill_steps) + 1) continue;

    std::vector<VehicleState> states;
    states.reserve(traj.steps.size());
    for (const auto& st : traj.steps) states.push_back(st.state);

    std::vector<Eigen::VectorXd> obs_at;  // observation at state index t
    obs_at.reserve(states.size());
    env.reset(traj.episode_seed);
    env.set_ego_state(states[0]);
    obs_at.push_back(env.observation());
    for (size_t t = 1; t < states.size() && !env.done(); ++t) {
      env.step_follow(states[t]);
      obs_at.push_back(env.observation());
    }

    auto segments = segment_demonstration(states, skill_steps);
    for (size_t k = 0; k < segments.size(); ++k) {
      if (k % static_cast<size_t>(stride) != 0) continue;
      if (k * skill_steps >= obs_at.size()) break;  // replay terminated early
      SegmentTask task;
      task.traj_index = static_cast<int>(ti);
      task.seg_index = static_cast<int>(k);
      task.obs = obs_at[k * skill_steps];
      task.segment = segments[k];
      tasks.push_back(std::move(task));
    }
  }

  std::vector<demo::SkillRecord> records(tasks.size());
  auto work = [&](size_t i) {
    const SegmentTask& t = tasks[i];
    demo::SkillRecord rec;
    rec.traj_index = t.traj_index;
    rec.seg_index = t.seg_index;
    rec.obs = t.obs;
    rec.start_state = t.segment.start_state;
    try {
      RecoveryResult res =
          recover(t.segment.states, t.segment.start_state, bounds, opt.recovery, dt);
      rec.theta = res.theta_hat;
      rec.residual = res.residual;
      rec.converged = res.converged;
    } catch (const std::exception&) {
      rec.theta = SkillParams{};
      rec.residual = std::numeric_limits<double>::infinity();
      rec.converged = false;
    }
    rec.flagged = !(rec.residual <= opt.recovery.flag_cutoff);
    records[i] = std::move(rec);
  };

  if (opt.jobs <= 1) {
    for (size_t i = 0; i < tasks.size(); ++i) work(i);
  } else {
    std::vector<std::future<void>> futs;
    const size_t chunk = (tasks.size() + opt.jobs - 1) / std::max(opt.jobs, 1);
    for (int w = 0; w < opt.jobs; ++w) {
      size_t lo = w * chunk, hi = std::min(tasks.size(), lo + chunk);
      if (lo >= hi) break;
      futs.push_back(std::async(std::launch::async, [&, lo, hi] {
        for (size_t i = lo; i < hi; ++i) work(i);
      }));
    }
    for (auto& f : futs) f.get();
  }
  out.records = std::move(records);

  if (report) {
    RecoveryReport r;
    r.segments = static_cast<int>(out.records.size());
    double sum = 0.0;
    for (const auto& rec : out.records) {
      if (rec.converged) r.converged += 1;
      if (rec.flagged) r.flagged += 1;
      double res = std::isfinite(rec.residual) ? rec.residual : 1e9;
      sum += res;
      for (int bkt = 0; bkt < 8; ++bkt) {
        if (res <= kHistEdges[bkt]) {
          r.residual_histogram[bkt] += 1;
          break;
        }
      }
    }
    r.mean_residual = r.segments ? sum / r.segments : 0.0;
    *report = r;
  }
  return out;
}

}  // namespace asaprl::recovery
