#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include "knaf/env.hpp"
#include "knaf/sim/world_map.hpp"

namespace knaf::sim {

struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // normalized to (-pi, pi]
};

/// Unicycle robot with a 5-beam lidar: constant forward speed, angular
/// velocity as the only control, 10 Hz updates. Beams are 34 deg apart and
/// listed left to right.
struct SimConfig {
  double v = 0.15;          // m/s
  double dt = 0.1;          // s
  double omega_min = -0.3;  // rad/s
  double omega_max = 0.3;
  Eigen::VectorXd beam_angles = default_beam_angles();
  double max_range = 5.0;
  double collision_radius = 0.15;
  double r_crash = -200.0;
  double r_alive = 1.0;

  static Eigen::VectorXd default_beam_angles() {
    Eigen::VectorXd a(5);
    const double d = 34.0 * M_PI / 180.0;
    a << 2 * d, d, 0.0, -d, -2 * d;
    return a;
  }

  void validate() const {
    if (!(v > 0.0) || !(dt > 0.0) || !(max_range > 0.0) ||
        !(collision_radius >= 0.0) || omega_min > omega_max) {
      throw std::invalid_argument("SimConfig: bad parameters");
    }
    if (beam_angles.size() != 5) {
      throw std::invalid_argument("SimConfig: expected 5 beams");
    }
  }
};

inline double normalize_angle(double theta) {
  double t = std::remainder(theta, 2.0 * M_PI);
  if (t <= -M_PI) t += 2.0 * M_PI;
  return t;
}

/// Per-beam nearest wall distance, clipped to max_range.
inline Eigen::VectorXd raycast(const WorldMap& map, const RobotState& state,
                               const SimConfig& cfg) {
  Eigen::VectorXd ranges(cfg.beam_angles.size());
  const Eigen::Vector2d origin(state.x, state.y);
  for (Eigen::Index i = 0; i < cfg.beam_angles.size(); ++i) {
    const double phi = state.theta + cfg.beam_angles(i);
    const Eigen::Vector2d dir(std::cos(phi), std::sin(phi));
    double best = cfg.max_range;
    for (const Segment& s : map.segments) {
      best = std::min(best, ray_segment_hit(origin, dir, s));
    }
    ranges(i) = best < 0.0 ? 0.0 : best;
  }
  return ranges;
}

struct StepOutcome {
  RobotState state;
  Eigen::VectorXd obs;
  double reward = 0.0;
  bool done = false;
};

/// Unicycle update followed by a collision test at the new position. One step
/// always travels exactly v*dt; collision pays r_crash and terminates, any
/// other step pays r_alive.
inline StepOutcome step(const WorldMap& map, const RobotState& state,
                        double omega, const SimConfig& cfg) {
  const double w =
      omega < cfg.omega_min ? cfg.omega_min
                            : (omega > cfg.omega_max ? cfg.omega_max : omega);
  RobotState next;
  next.x = state.x + cfg.v * std::cos(state.theta) * cfg.dt;
  next.y = state.y + cfg.v * std::sin(state.theta) * cfg.dt;
  next.theta = normalize_angle(state.theta + w * cfg.dt);

  StepOutcome out;
  out.state = next;
  out.obs = raycast(map, next, cfg);
  const bool hit =
      min_wall_distance(map, {next.x, next.y}) < cfg.collision_radius;
  out.reward = hit ? cfg.r_crash : cfg.r_alive;
  out.done = hit;
  return out;
}

inline RobotState sample_spawn(const WorldMap& map, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, map.spawns.size() - 1);
  const SpawnPose& p = map.spawns[pick(rng)];
  return {p.x, p.y, normalize_angle(p.theta)};
}

/// Stateful environment adapter around the pure simulator functions. Keeps a
/// monotone step counter so callers can assert how many environment
/// transitions an operation consumed.
class LidarSim {
public:
  explicit LidarSim(WorldMap map, SimConfig cfg = SimConfig())
      : map_(std::move(map)), cfg_(cfg) {
    cfg_.validate();
    if (map_.segments.empty() || map_.spawns.empty()) {
      throw std::invalid_argument("LidarSim: map needs segments and spawns");
    }
  }

  int state_dim() const { return static_cast<int>(cfg_.beam_angles.size()); }
  int action_dim() const { return 1; }
  Eigen::VectorXd action_low() const {
    return Eigen::VectorXd::Constant(1, cfg_.omega_min);
  }
  Eigen::VectorXd action_high() const {
    return Eigen::VectorXd::Constant(1, cfg_.omega_max);
  }

  Eigen::VectorXd reset(std::mt19937_64& rng) {
    state_ = sample_spawn(map_, rng);
    return raycast(map_, state_, cfg_);
  }

  EnvStep step(const Eigen::VectorXd& action) {
    if (action.size() != 1) {
      throw std::invalid_argument("LidarSim: action must be 1-dimensional");
    }
    ++step_count_;
    StepOutcome o = sim::step(map_, state_, action(0), cfg_);
    state_ = o.state;
    return {std::move(o.obs), o.reward, o.done};
  }

  const RobotState& state() const { return state_; }
  const WorldMap& map() const { return map_; }
  const SimConfig& config() const { return cfg_; }
  long step_count() const { return step_count_; }

private:
  WorldMap map_;
  SimConfig cfg_;
  RobotState state_;
  long step_count_ = 0;
};

}  // namespace knaf::sim
