#include "asaprl/sim/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asaprl::sim {

namespace {

// IDM parameters of the rule-based traffic planner.
constexpr double kIdmMinGap = 2.0;
constexpr double kIdmHeadway = 1.5;
constexpr double kIdmAccel = 1.5;
constexpr double kIdmDecel = 2.0;

struct Corners {
  double x[4], y[4];
};

Corners rect_corners(double cx, double cy, double h, double len, double wid) {
  Corners c;
  double dx = 0.5 * len, dy = 0.5 * wid;
  double ch = std::cos(h), sh = std::sin(h);
  const double ox[4] = {dx, dx, -dx, -dx};
  const double oy[4] = {dy, -dy, -dy, dy};
  for (int i = 0; i < 4; ++i) {
    c.x[i] = cx + ox[i] * ch - oy[i] * sh;
    c.y[i] = cy + ox[i] * sh + oy[i] * ch;
  }
  return c;
}

bool separated_on_axis(const Corners& a, const Corners& b, double ax, double ay) {
  double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
  for (int i = 0; i < 4; ++i) {
    double pa = a.x[i] * ax + a.y[i] * ay;
    double pb = b.x[i] * ax + b.y[i] * ay;
    amin = std::min(amin, pa);
    amax = std::max(amax, pa);
    bmin = std::min(bmin, pb);
    bmax = std::max(bmax, pb);
  }
  return amax < bmin || bmax < amin;
}

}  // namespace

bool rectangles_overlap(double x1, double y1, double h1, double x2, double y2, double h2,
                        double len, double wid) {
  Corners a = rect_corners(x1, y1, h1, len, wid);
  Corners b = rect_corners(x2, y2, h2, len, wid);
  const double axes[4][2] = {{std::cos(h1), std::sin(h1)},
                             {-std::sin(h1), std::cos(h1)},
                             {std::cos(h2), std::sin(h2)},
                             {-std::sin(h2), std::cos(h2)}};
  for (auto& ax : axes)
    if (separated_on_axis(a, b, ax[0], ax[1])) return false;
  return true;
}

std::string to_string(Cause c) {
  switch (c) {
    case Cause::running: return "running";
    case Cause::success: return "success";
    case Cause::crash: return "crash";
    case Cause::off_road: return "off_road";
    case Cause::timeout: return "timeout";
  }
  return "running";
}

RewardBreakdown compute_reward(const WorldState& prev, const WorldState& next) {
  RewardBreakdown r;
  r.progress = std::floor(next.progress / 10.0) - std::floor(prev.progress / 10.0);
  r.destination = (next.destination_reached && !prev.destination_reached) ? 1.0 : 0.0;
  r.crash = (next.collided && !prev.collided) ? -5.0 : 0.0;
  r.overtaking = 0.1 * (next.passed_cars - prev.passed_cars);
  return r;
}

TrafficEnv::TrafficEnv(const ScenarioConfig& cfg) : cfg_(cfg) {
  if (cfg_.lanes < 0 || cfg_.density < 0.0 || cfg_.k_nearest < 0 || cfg_.dt <= 0.0)
    throw std::invalid_argument("invalid scenario config");
  reset(cfg_.seed);
}

double TrafficEnv::lane_center(int lane) const {
  return (lane - 0.5 * (scen_.lanes - 1)) * cfg_.lane_width;
}

int TrafficEnv::current_lane() const {
  double half = 0.5 * (scen_.lanes - 1);
  int lane = static_cast<int>(std::lround(world_.ego_lat / cfg_.lane_width + half));
  return static_cast<int>(clamp(lane, 0, scen_.lanes - 1));
}

VehicleState TrafficEnv::traffic_pose(const TrafficVehicle& t) const {
  VehicleState st;
  scen_.route.pose_at(t.s, lane_center(t.lane), st.x, st.y, st.phi);
  st.v = t.v;
  st.a = 0.0;
  return st;
}

Eigen::VectorXd TrafficEnv::reset(uint64_t seed) {
  Rng scen_rng = Rng::substream(seed, "scenario");
  scen_ = build_scenario(cfg_, scen_rng);
  time_limit_ = cfg_.time_limit_steps > 0
                    ? cfg_.time_limit_steps
                    : static_cast<int>(
                          std::ceil(scen_.route_length / (0.4 * cfg_.speed_limit) / cfg_.dt));

  world_ = WorldState{};
  cause_ = Cause::running;
  episode_reward_ = 0.0;

  // ego at route start on a random lane
  Rng ego_rng = Rng::substream(seed, "ego");
  int ego_lane = static_cast<int>(ego_rng.uniform_int(0, scen_.lanes - 1));
  VehicleState ego;
  scen_.route.pose_at(0.0, lane_center(ego_lane), ego.x, ego.y, ego.phi);
  ego.v = ego_rng.uniform(cfg_.ego_speed_min, cfg_.ego_speed_max);
  ego.a = 0.0;
  world_.ego = ego;
  refresh_ego_route_coords();
  world_.progress = 0.0;

  // traffic spawn: random lane/position/target speed, no initial overlaps
  Rng traffic_rng = Rng::substream(seed, "traffic");
  int n_vehicles = static_cast<int>(std::lround(cfg_.density * scen_.route_length / 100.0));
  const double spawn_lo = 18.0;
  const double spawn_hi = scen_.route_length - 5.0;
  const double min_gap = kVehicleLength + 6.0;
  for (int i = 0; i < n_vehicles; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      TrafficVehicle t;
      t.lane = static_cast<int>(traffic_rng.uniform_int(0, scen_.lanes - 1));
      t.s = traffic_rng.uniform(spawn_lo, spawn_hi);
      t.target_speed = traffic_rng.uniform(cfg_.traffic_speed_min, cfg_.traffic_speed_max);
      t.v = t.target_speed;
      bool clear = true;
      for (const auto& o : world_.traffic)
        if (o.lane == t.lane && std::abs(o.s - t.s) < min_gap) clear = false;
      if (clear) {
        world_.traffic.push_back(t);
        placed = true;
      }
    }
    if (!placed)
      throw std::runtime_error("traffic density leaves no room for non-overlapping spawns");
  }
  return observation();
}

void TrafficEnv::add_traffic_vehicle(int lane, double s, double v, double target_speed) {
  TrafficVehicle t;
  t.lane = lane;
  t.s = s;
  t.v = v;
  t.target_speed = target_speed;
  world_.traffic.push_back(t);
}

void TrafficEnv::set_ego_state(const VehicleState& s) {
  world_.ego = s;
  refresh_ego_route_coords();
}

void TrafficEnv::refresh_ego_route_coords() {
  scen_.route.project(world_.ego.x, world_.ego.y, world_.ego_s, world_.ego_lat, world_.ego_s);
}

void TrafficEnv::advance_traffic() {
  const double dt = cfg_.dt;
  const double half_block = 0.5 * (cfg_.lane_width + kVehicleWidth);
  std::vector<double> accel(world_.traffic.size(), 0.0);

  for (size_t i = 0; i < world_.traffic.size(); ++i) {
    const TrafficVehicle& t = world_.traffic[i];
    // nearest leader in the same lane; the ego blocks every lane it straddles
    double lead_gap = 1e9, lead_v = 0.0;
    for (size_t j = 0; j < world_.traffic.size(); ++j) {
      if (j == i || world_.traffic[j].lane != t.lane) continue;
      double gap = world_.traffic[j].s - t.s;
      if (gap > 0.0 && gap < lead_gap) {
        lead_gap = gap;
        lead_v = world_.traffic[j].v;
      }
    }
    if (std::abs(world_.ego_lat - lane_center(t.lane)) < half_block) {
      double gap = world_.ego_s - t.s;
      if (gap > 0.0 && gap < lead_gap) {
        lead_gap = gap;
        lead_v = world_.ego.v;
      }
    }
    double a = kIdmAccel * (1.0 - std::pow(t.v / std::max(t.target_speed, 0.1), 4.0));
    if (lead_gap < 1e8) {
      double gap = std::max(lead_gap - kVehicleLength, 0.1);
      double dv = t.v - lead_v;
      double s_star = kIdmMinGap + t.v * kIdmHeadway +
                      t.v * dv / (2.0 * std::sqrt(kIdmAccel * kIdmDecel));
      s_star = std::max(s_star, kIdmMinGap);
      a -= kIdmAccel * (s_star / gap) * (s_star / gap);
    }
    accel[i] = a;
  }
  for (size_t i = 0; i < world_.traffic.size(); ++i) {
    TrafficVehicle& t = world_.traffic[i];
    t.v = std::max(0.0, t.v + accel[i] * dt);
    t.s += t.v * dt;
  }
}

void TrafficEnv::detect_events() {
  // collision with traffic
  if (!world_.collided) {
    for (const auto& t : world_.traffic) {
      if (std::abs(t.s - world_.ego_s) > 20.0) continue;
      VehicleState tp = traffic_pose(t);
      if (rectangles_overlap(world_.ego.x, world_.ego.y, world_.ego.phi, tp.x, tp.y, tp.phi)) {
        world_.collided = true;
        cause_ = Cause::crash;
        break;
      }
    }
  }
  // curb: any ego corner outside the drivable band
  if (!world_.collided) {
    double half_road = 0.5 * scen_.lanes * cfg_.lane_width;
    Corners c = rect_corners(world_.ego.x, world_.ego.y, world_.ego.phi, kVehicleLength,
                             kVehicleWidth);
    for (int i = 0; i < 4; ++i) {
      double s, lat;
      scen_.route.project(c.x[i], c.y[i], s, lat, world_.ego_s);
      if (std::abs(lat) > half_road || s < -10.0) {
        world_.collided = true;
        cause_ = Cause::off_road;
        break;
      }
    }
  }
  if (cause_ == Cause::running) {
    if (world_.progress >= scen_.route_length) {
      if (cfg_.destination_reward) world_.destination_reached = true;
      cause_ = Cause::success;
    } else if (world_.step_count >= time_limit_) {
      cause_ = Cause::timeout;
    }
  }
}

StepOutcome TrafficEnv::advance_to(const VehicleState& ego_next, const StepRecord& log_info) {
  if (done()) throw std::logic_error("stepping a finished episode");

  WorldState prev = world_;
  world_.ego = ego_next;
  world_.ego.phi = wrap_angle(world_.ego.phi);
  advance_traffic();
  world_.step_count += 1;
  refresh_ego_route_coords();
  world_.progress = std::max(world_.progress, world_.ego_s);

  // overtakes: ego route-longitudinal position crosses a vehicle's
  for (size_t j = 0; j < world_.traffic.size(); ++j) {
    TrafficVehicle& t = world_.traffic[j];
    if (!t.passed && prev.ego_s <= prev.traffic[j].s && world_.ego_s > t.s) {
      t.passed = true;
      world_.passed_cars += 1;
    }
  }

  detect_events();

  StepOutcome out;
  out.breakdown = compute_reward(prev, world_);
  out.reward = out.breakdown.total();
  out.done = done();
  out.cause = cause_;
  out.steps = 1;
  out.observation = observation();
  episode_reward_ += out.reward;

  if (sink_) {
    StepRecord rec = log_info;
    rec.t = world_.step_count;
    rec.ego = world_.ego;
    rec.reward = out.reward;
    rec.breakdown = out.breakdown;
    rec.cause = cause_;
    sink_(rec);
  }
  return out;
}

StepOutcome TrafficEnv::step_control(double steer, double pedal) {
  steer = clamp(steer, -1.0, 1.0);
  pedal = clamp(pedal, -1.0, 1.0);
  const SkillBounds b = cfg_.skill_bounds();
  const double dt = cfg_.dt;
  const VehicleState& e = world_.ego;

  double delta = steer * kMaxSteerAngle;
  double acc = pedal >= 0.0 ? pedal * b.a_max : pedal * (-b.a_min);
  VehicleState n;
  n.x = e.x + e.v * std::cos(e.phi) * dt;
  n.y = e.y + e.v * std::sin(e.phi) * dt;
  n.phi = wrap_angle(e.phi + e.v / kWheelbase * std::tan(delta) * dt);
  n.v = std::max(0.0, e.v + acc * dt);
  n.a = (n.v - e.v) / dt;

  StepRecord rec;
  rec.control = std::make_pair(steer, pedal);
  return advance_to(n, rec);
}

StepOutcome TrafficEnv::step_follow(const VehicleState& next) {
  return advance_to(next, StepRecord{});
}

StepOutcome TrafficEnv::step_skill(const skill::Trajectory& traj, const SkillParams* theta_tag) {
  if (traj.horizon() < 1) throw std::invalid_argument("step_skill: empty trajectory");
  double jump = std::hypot(traj.start().x - world_.ego.x, traj.start().y - world_.ego.y);
  if (jump > 0.5)
    throw std::invalid_argument("step_skill: trajectory discontinuous with current ego state");

  StepOutcome total;
  total.steps = 0;
  for (int k = 1; k < static_cast<int>(traj.states.size()); ++k) {
    StepRecord rec;
    if (theta_tag) rec.theta = *theta_tag;
    StepOutcome one = advance_to(traj.states[k], rec);
    total.breakdown += one.breakdown;
    total.steps += 1;
    total.observation = std::move(one.observation);
    total.done = one.done;
    total.cause = one.cause;
    if (one.done) break;
  }
  total.reward = total.breakdown.total();
  return total;
}

Eigen::VectorXd TrafficEnv::observation() const {
  const int K = cfg_.k_nearest;
  Eigen::VectorXd obs(obs_dim());
  const VehicleState& e = world_.ego;

  int lane = current_lane();
  double route_heading = scen_.route.heading_at(world_.ego_s);
  obs(0) = e.v;
  obs(1) = e.a;
  obs(2) = world_.ego_lat - lane_center(lane);
  obs(3) = wrap_angle(e.phi - route_heading);
  obs(4) = clamp((scen_.route_length - world_.progress) / scen_.route_length, 0.0, 1.0);

  // K nearest traffic vehicles by world distance, stable order
  std::vector<std::pair<double, size_t>> order;
  order.reserve(world_.traffic.size());
  std::vector<VehicleState> poses(world_.traffic.size());
  for (size_t j = 0; j < world_.traffic.size(); ++j) {
    poses[j] = traffic_pose(world_.traffic[j]);
    double d2 = std::pow(poses[j].x - e.x, 2) + std::pow(poses[j].y - e.y, 2);
    order.emplace_back(d2, j);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  double ce = std::cos(e.phi), se = std::sin(e.phi);
  for (int k = 0; k < K; ++k) {
    int base = 5 + 4 * k;
    if (k < static_cast<int>(order.size())) {
      const VehicleState& p = poses[order[k].second];
      double dx = p.x - e.x, dy = p.y - e.y;
      obs(base + 0) = dx * ce + dy * se;
      obs(base + 1) = -dx * se + dy * ce;
      obs(base + 2) = p.v - e.v;
      obs(base + 3) = wrap_angle(p.phi - e.phi);
    } else {
      obs(base + 0) = 100.0;  // padding sentinel
      obs(base + 1) = 0.0;
      obs(base + 2) = 0.0;
      obs(base + 3) = 0.0;
    }
  }
  obs(5 + 4 * K + 0) = lane < scen_.lanes - 1 ? 1.0 : 0.0;  // left lane exists
  obs(5 + 4 * K + 1) = lane > 0 ? 1.0 : 0.0;                // right lane exists
  return obs;
}

EpisodeMetrics TrafficEnv::episode_metrics() const {
  if (!done()) throw std::logic_error("episode_metrics requires a terminated episode");
  EpisodeMetrics m;
  m.episode_reward = episode_reward_;
  m.collision = world_.collided;
  m.completion = clamp(world_.progress / scen_.route_length, 0.0, 1.0);
  m.success = cause_ == Cause::success && !world_.collided;
  m.passed_cars = world_.passed_cars;
  m.steps = world_.step_count;
  return m;
}

}  // namespace asaprl::sim
