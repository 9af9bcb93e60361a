#include "asaprl/sim/scenario.hpp"

#include <fstream>
#include <json.hpp>
#include <numbers>
#include <stdexcept>

namespace asaprl::sim {

using nlohmann::json;

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::corridor: return "corridor";
    case ScenarioKind::highway: return "highway";
    case ScenarioKind::intersection: return "intersection";
    case ScenarioKind::roundabout: return "roundabout";
  }
  return "corridor";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "corridor") return ScenarioKind::corridor;
  if (s == "highway") return ScenarioKind::highway;
  if (s == "intersection") return ScenarioKind::intersection;
  if (s == "roundabout") return ScenarioKind::roundabout;
  throw std::invalid_argument("unknown scenario kind: " + s);
}

std::string ScenarioConfig::to_json_string() const {
  json j;
  j["kind"] = to_string(kind);
  j["lanes"] = lanes;
  j["lane_width"] = lane_width;
  j["route_length"] = route_length;
  j["density"] = density;
  j["traffic_speed"] = {traffic_speed_min, traffic_speed_max};
  j["ego_speed"] = {ego_speed_min, ego_speed_max};
  j["speed_limit"] = speed_limit;
  j["time_limit_steps"] = time_limit_steps;
  j["k_nearest"] = k_nearest;
  j["dt"] = dt;
  j["destination_reward"] = destination_reward;
  j["seed"] = seed;
  return j.dump();
}

ScenarioConfig ScenarioConfig::from_json_string(const std::string& text) {
  json j = json::parse(text);
  ScenarioConfig c;
  if (j.contains("kind")) c.kind = scenario_kind_from_string(j["kind"].get<std::string>());
  if (j.contains("lanes")) c.lanes = j["lanes"].get<int>();
  if (j.contains("lane_width")) c.lane_width = j["lane_width"].get<double>();
  if (j.contains("route_length")) c.route_length = j["route_length"].get<double>();
  if (j.contains("density")) c.density = j["density"].get<double>();
  if (j.contains("traffic_speed")) {
    c.traffic_speed_min = j["traffic_speed"][0].get<double>();
    c.traffic_speed_max = j["traffic_speed"][1].get<double>();
  }
  if (j.contains("ego_speed")) {
    c.ego_speed_min = j["ego_speed"][0].get<double>();
    c.ego_speed_max = j["ego_speed"][1].get<double>();
  }
  if (j.contains("speed_limit")) c.speed_limit = j["speed_limit"].get<double>();
  if (j.contains("time_limit_steps")) c.time_limit_steps = j["time_limit_steps"].get<int>();
  if (j.contains("k_nearest")) c.k_nearest = j["k_nearest"].get<int>();
  if (j.contains("dt")) c.dt = j["dt"].get<double>();
  if (j.contains("destination_reward")) c.destination_reward = j["destination_reward"].get<bool>();
  if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
  if (c.lanes < 0 || c.density < 0.0 || c.dt <= 0.0 || c.time_limit_steps < 0)
    throw std::invalid_argument("invalid scenario config values");
  return c;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

void ScenarioConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario config: " + path);
  out << to_json_string() << "\n";
}

ResolvedScenario build_scenario(const ScenarioConfig& cfg, Rng& rng) {
  constexpr double pi = std::numbers::pi;
  ResolvedScenario rs;
  rs.lanes = cfg.lanes > 0 ? cfg.lanes : static_cast<int>(rng.uniform_int(2, 3));

  auto jitter = [&](double v) { return v * rng.uniform(0.85, 1.15); };

  switch (cfg.kind) {
    case ScenarioKind::corridor: {
      rs.route_length = cfg.route_length > 0.0 ? cfg.route_length : 150.0;
      rs.route.add_straight(rs.route_length + 60.0);
      break;
    }
    case ScenarioKind::highway: {
      rs.route_length = cfg.route_length > 0.0 ? cfg.route_length : jitter(300.0);
      rs.route.add_straight(rs.route_length + 80.0);
      break;
    }
    case ScenarioKind::intersection: {
      double total = cfg.route_length > 0.0 ? cfg.route_length : jitter(200.0);
      double radius = 12.0;
      double arc_len = radius * pi / 2.0;
      double approach = clamp(jitter(0.45 * (total - arc_len)), 30.0, total - arc_len - 20.0);
      double exit_len = total - arc_len - approach;
      rs.route.add_straight(approach);
      rs.route.add_arc(radius, pi / 2.0);  // 90 degree left connector
      rs.route.add_straight(exit_len + 60.0);
      rs.route_length = total;
      break;
    }
    case ScenarioKind::roundabout: {
      double total = cfg.route_length > 0.0 ? cfg.route_length : jitter(200.0);
      double radius = 16.0;
      // straight-through movement: half a loop (larger sweeps would cross
      // back over the entry road and make world->route projection ambiguous)
      double angle = pi;
      double arc_len = radius * angle;
      double entry = clamp(jitter(0.5 * (total - arc_len)), 25.0, total - arc_len - 15.0);
      double exit_len = total - arc_len - entry;
      rs.route.add_straight(entry);
      rs.route.add_arc(radius, angle);
      rs.route.add_straight(exit_len + 60.0);
      rs.route_length = total;
      break;
    }
  }
  return rs;
}

}  // namespace asaprl::sim
