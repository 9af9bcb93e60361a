#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "asaprl/core/types.hpp"
#include "asaprl/sim/scenario.hpp"
#include "asaprl/skill/geometry.hpp"

namespace asaprl::sim {

inline constexpr double kVehicleLength = 4.5;
inline constexpr double kVehicleWidth = 1.8;
inline constexpr double kWheelbase = 2.8;
inline constexpr double kMaxSteerAngle = 0.5;  // rad

/// Oriented-rectangle overlap (separating axis test).
bool rectangles_overlap(double x1, double y1, double h1, double x2, double y2, double h2,
                        double len = kVehicleLength, double wid = kVehicleWidth);

enum class Cause { running, success, crash, off_road, timeout };
std::string to_string(Cause c);

struct RewardBreakdown {
  double progress = 0.0;
  double destination = 0.0;
  double crash = 0.0;
  double overtaking = 0.0;
  double total() const { return progress + destination + crash + overtaking; }
  RewardBreakdown& operator+=(const RewardBreakdown& o) {
    progress += o.progress;
    destination += o.destination;
    crash += o.crash;
    overtaking += o.overtaking;
    return *this;
  }
};

struct TrafficVehicle {
  double s = 0.0;  // route-longitudinal position of the vehicle center
  int lane = 0;
  double v = 0.0;
  double target_speed = 0.0;
  bool passed = false;  // ego has overtaken this vehicle this episode
};

struct WorldState {
  VehicleState ego;
  std::vector<TrafficVehicle> traffic;
  int step_count = 0;
  double progress = 0.0;  // nondecreasing route progress (m)
  double ego_s = 0.0;
  double ego_lat = 0.0;
  int passed_cars = 0;
  bool collided = false;
  bool destination_reached = false;
};

struct StepOutcome {
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool done = false;
  Cause cause = Cause::running;
  RewardBreakdown breakdown;
  int steps = 0;  // simulation steps consumed
};

struct EpisodeMetrics {
  double episode_reward = 0.0;
  bool success = false;
  double completion = 0.0;
  bool collision = false;
  int passed_cars = 0;
  int steps = 0;
};

/// Per-step episode log record (JSON-lines friendly).
struct StepRecord {
  int t = 0;
  VehicleState ego;
  std::optional<std::pair<double, double>> control;  // steer, pedal
  std::optional<SkillParams> theta;
  double reward = 0.0;
  RewardBreakdown breakdown;
  Cause cause = Cause::running;
};

/// Reward of one transition between consecutive world snapshots (Eq.-style
/// sparse terms: 10 m progress marks, destination, crash, overtakes).
RewardBreakdown compute_reward(const WorldState& prev, const WorldState& next);

/// Deterministic 2D lane-graph traffic environment. One instance is
/// single-threaded; independent instances may run in parallel.
class TrafficEnv {
 public:
  explicit TrafficEnv(const ScenarioConfig& cfg);

  Eigen::VectorXd reset() { return reset(cfg_.seed); }
  Eigen::VectorXd reset(uint64_t seed);

  /// One simulation step under a (steer, pedal) control in [-1,1]^2
  /// (kinematic bicycle).
  StepOutcome step_control(double steer, double pedal);

  /// Execute a skill trajectory waypoint-by-waypoint. The trajectory start
  /// must coincide with the current ego state (0.5 m guard). theta_tag is
  /// only used for episode logging.
  StepOutcome step_skill(const skill::Trajectory& traj, const SkillParams* theta_tag = nullptr);

  /// One simulation step with the ego following an externally provided state
  /// (trace replay); traffic advances normally.
  StepOutcome step_follow(const VehicleState& next);

  Eigen::VectorXd observation() const;
  int obs_dim() const { return 5 + 4 * cfg_.k_nearest + 2; }

  const ScenarioConfig& config() const { return cfg_; }
  const WorldState& world() const { return world_; }
  const Route& route() const { return scen_.route; }
  double route_length() const { return scen_.route_length; }
  int lanes() const { return scen_.lanes; }
  int time_limit_steps() const { return time_limit_; }
  bool done() const { return cause_ != Cause::running; }
  Cause cause() const { return cause_; }
  VehicleState ego() const { return world_.ego; }
  SkillBounds skill_bounds() const { return cfg_.skill_bounds(); }

  /// Valid once the episode has terminated.
  EpisodeMetrics episode_metrics() const;

  /// World pose of a traffic vehicle.
  VehicleState traffic_pose(const TrafficVehicle& t) const;
  double lane_center(int lane) const;

  /// Scenario/test hooks.
  void add_traffic_vehicle(int lane, double s, double v, double target_speed);
  void set_ego_state(const VehicleState& s);
  void set_step_sink(std::function<void(const StepRecord&)> sink) { sink_ = std::move(sink); }

 private:
  StepOutcome advance_to(const VehicleState& ego_next, const StepRecord& log_info);
  void advance_traffic();
  void refresh_ego_route_coords();
  void detect_events();
  int current_lane() const;

  ScenarioConfig cfg_;
  ResolvedScenario scen_;
  WorldState world_;
  Cause cause_ = Cause::running;
  int time_limit_ = 0;
  double episode_reward_ = 0.0;
  std::function<void(const StepRecord&)> sink_;
};

}  // namespace asaprl::sim
