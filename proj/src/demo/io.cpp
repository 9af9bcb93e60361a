#include "asaprl/demo/io.hpp"

#include <fstream>
#include <json.hpp>

namespace asaprl::demo {

using nlohmann::json;

namespace {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw FormatError(std::string("missing field `") + name + "`");
  return *it;
}

json state_to_json(const VehicleState& s) {
  return json{{"x", s.x}, {"y", s.y}, {"phi", s.phi}, {"v", s.v}, {"a", s.a}};
}

VehicleState state_from_json(const json& j) {
  VehicleState s;
  s.x = field(j, "x").get<double>();
  s.y = field(j, "y").get<double>();
  s.phi = field(j, "phi").get<double>();
  s.v = field(j, "v").get<double>();
  s.a = field(j, "a").get<double>();
  return s;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  return out;
}

std::vector<json> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<json> lines;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      lines.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (lines.empty()) throw FormatError(path + ": empty file");
  return lines;
}

void check_header(const json& h, const char* expected_type, int version) {
  if (field(h, "type").get<std::string>() != expected_type)
    throw FormatError(std::string("expected header type `") + expected_type + "`");
  if (field(h, "version").get<int>() != version)
    throw FormatError("unsupported format version");
}

}  // namespace

void save_control_demos(const ControlDemoSet& d, const std::string& path) {
  auto out = open_out(path);
  json header{{"type", "du_header"},
              {"version", d.version},
              {"scenario", json::parse(d.scenario.to_json_string())},
              {"seed", d.seed},
              {"trajectories", d.trajectories.size()}};
  out << header.dump() << "\n";
  for (size_t i = 0; i < d.trajectories.size(); ++i) {
    const auto& tr = d.trajectories[i];
    out << json{{"type", "traj"}, {"index", i}, {"seed", tr.episode_seed},
                {"steps", tr.steps.size()}}
               .dump()
        << "\n";
    for (size_t t = 0; t < tr.steps.size(); ++t) {
      const auto& st = tr.steps[t];
      json rec = state_to_json(st.state);
      rec["type"] = "step";
      rec["t"] = t;
      rec["steer"] = st.steer;
      rec["pedal"] = st.pedal;
      out << rec.dump() << "\n";
    }
  }
}

ControlDemoSet load_control_demos(const std::string& path) {
  auto lines = read_lines(path);
  check_header(lines[0], "du_header", 1);
  ControlDemoSet d;
  d.scenario = sim::ScenarioConfig::from_json_string(field(lines[0], "scenario").dump());
  d.seed = field(lines[0], "seed").get<uint64_t>();
  for (size_t i = 1; i < lines.size(); ++i) {
    const json& j = lines[i];
    std::string type = field(j, "type").get<std::string>();
    if (type == "traj") {
      ControlTrajectory tr;
      tr.episode_seed = field(j, "seed").get<uint64_t>();
      d.trajectories.push_back(std::move(tr));
    } else if (type == "step") {
      if (d.trajectories.empty()) throw FormatError("step record before any trajectory");
      DemoStep st;
      st.state = state_from_json(j);
      st.steer = field(j, "steer").get<double>();
      st.pedal = field(j, "pedal").get<double>();
      d.trajectories.back().steps.push_back(st);
    } else {
      throw FormatError("unknown record type: " + type);
    }
  }
  return d;
}

void save_skill_dataset(const SkillDataset& d, const std::string& path) {
  auto out = open_out(path);
  json header{{"type", "dtheta_header"},
              {"version", d.version},
              {"scenario", json::parse(d.scenario.to_json_string())},
              {"seed", d.seed},
              {"skill_steps", d.skill_steps},
              {"weights", {d.weights.w_xy, d.weights.w_phi, d.weights.w_v, d.weights.w_a}},
              {"records", d.records.size()}};
  out << header.dump() << "\n";
  for (const auto& r : d.records) {
    json rec{{"type", "segment"},
             {"traj", r.traj_index},
             {"seg", r.seg_index},
             {"obs", std::vector<double>(r.obs.data(), r.obs.data() + r.obs.size())},
             {"start", state_to_json(r.start_state)},
             {"theta", {r.theta.y_e, r.theta.phi_e, r.theta.v_e, r.theta.a_e}},
             {"residual", r.residual},
             {"converged", r.converged},
             {"flagged", r.flagged}};
    out << rec.dump() << "\n";
  }
}

SkillDataset load_skill_dataset(const std::string& path) {
  auto lines = read_lines(path);
  check_header(lines[0], "dtheta_header", 1);
  SkillDataset d;
  d.scenario = sim::ScenarioConfig::from_json_string(field(lines[0], "scenario").dump());
  d.seed = field(lines[0], "seed").get<uint64_t>();
  d.skill_steps = field(lines[0], "skill_steps").get<int>();
  const json& w = field(lines[0], "weights");
  d.weights = recovery::RecoveryWeights{w[0].get<double>(), w[1].get<double>(),
                                        w[2].get<double>(), w[3].get<double>()};
  for (size_t i = 1; i < lines.size(); ++i) {
    const json& j = lines[i];
    SkillRecord r;
    r.traj_index = field(j, "traj").get<int>();
    r.seg_index = field(j, "seg").get<int>();
    auto obs = field(j, "obs").get<std::vector<double>>();
    r.obs = Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<long>(obs.size()));
    r.start_state = state_from_json(field(j, "start"));
    const json& th = field(j, "theta");
    r.theta = SkillParams{th[0].get<double>(), th[1].get<double>(), th[2].get<double>(),
                          th[3].get<double>()};
    r.residual = field(j, "residual").get<double>();
    r.converged = field(j, "converged").get<bool>();
    r.flagged = field(j, "flagged").get<bool>();
    d.records.push_back(std::move(r));
  }
  return d;
}

void save_skill_reward_dataset(const SkillRewardDataset& d, const std::string& path) {
  auto out = open_out(path);
  json header{{"type", "dthetap_header"},
              {"version", d.version},
              {"scenario", json::parse(d.scenario.to_json_string())},
              {"seed", d.seed},
              {"skill_steps", d.skill_steps},
              {"actor_hash", d.actor_hash},
              {"records", d.records.size()}};
  out << header.dump() << "\n";
  for (const auto& r : d.records) {
    json rec{{"type", "transition"},
             {"obs", std::vector<double>(r.obs.data(), r.obs.data() + r.obs.size())},
             {"theta", {r.theta.y_e, r.theta.phi_e, r.theta.v_e, r.theta.a_e}},
             {"reward", r.reward},
             {"next_obs",
              std::vector<double>(r.next_obs.data(), r.next_obs.data() + r.next_obs.size())},
             {"done", r.done}};
    out << rec.dump() << "\n";
  }
}

SkillRewardDataset load_skill_reward_dataset(const std::string& path) {
  auto lines = read_lines(path);
  check_header(lines[0], "dthetap_header", 1);
  SkillRewardDataset d;
  d.scenario = sim::ScenarioConfig::from_json_string(field(lines[0], "scenario").dump());
  d.seed = field(lines[0], "seed").get<uint64_t>();
  d.skill_steps = field(lines[0], "skill_steps").get<int>();
  d.actor_hash = field(lines[0], "actor_hash").get<uint64_t>();
  for (size_t i = 1; i < lines.size(); ++i) {
    const json& j = lines[i];
    SkillRewardRecord r;
    auto obs = field(j, "obs").get<std::vector<double>>();
    r.obs = Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<long>(obs.size()));
    const json& th = field(j, "theta");
    r.theta = SkillParams{th[0].get<double>(), th[1].get<double>(), th[2].get<double>(),
                          th[3].get<double>()};
    r.reward = field(j, "reward").get<double>();
    auto nobs = field(j, "next_obs").get<std::vector<double>>();
    r.next_obs = Eigen::Map<const Eigen::VectorXd>(nobs.data(), static_cast<long>(nobs.size()));
    r.done = field(j, "done").get<bool>();
    d.records.push_back(std::move(r));
  }
  return d;
}

}  // namespace asaprl::demo
