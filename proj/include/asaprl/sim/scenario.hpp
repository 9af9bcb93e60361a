#pragma once

#include <string>

#include "asaprl/core/types.hpp"
#include "asaprl/sim/route.hpp"
#include "asaprl/util/rng.hpp"

namespace asaprl::sim {

enum class ScenarioKind { corridor, highway, intersection, roundabout };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::corridor;
  int lanes = 2;               // 0 = randomize in {2, 3} per episode
  double lane_width = 3.5;
  double route_length = 200.0; // 0 = kind-dependent randomized length
  double density = 1.2;        // traffic vehicles per 100 m
  double traffic_speed_min = 5.0;
  double traffic_speed_max = 7.5;
  double ego_speed_min = 5.0;
  double ego_speed_max = 8.0;
  double speed_limit = 12.0;
  int time_limit_steps = 0;    // 0 = route_length / (0.4 * speed_limit) seconds
  int k_nearest = 4;
  double dt = 0.1;
  bool destination_reward = true;
  uint64_t seed = 0;

  SkillBounds skill_bounds() const {
    SkillBounds b;
    b.v_max = speed_limit;
    return b;
  }

  std::string to_json_string() const;
  static ScenarioConfig from_json_string(const std::string& text);
  static ScenarioConfig load(const std::string& path);
  void save(const std::string& path) const;
};

/// Geometry resolved for one episode (randomized pieces fixed by the rng).
struct ResolvedScenario {
  Route route;
  int lanes = 2;
  double route_length = 0.0;
};

ResolvedScenario build_scenario(const ScenarioConfig& cfg, Rng& rng);

}  // namespace asaprl::sim
