#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "knaf/learner.hpp"
#include "knaf/naf_policy.hpp"
#include "knaf/sim/lidar_sim.hpp"

namespace knaf {

struct EvalReport {
  long long total_reward = 0;
  long crashes = 0;
  long steps = 0;
  // Filled only when requested.
  std::vector<Eigen::VectorXd> obs_trace;
  std::vector<Eigen::VectorXd> action_trace;
};

/// Greedy (noise-free) rollout for a fixed number of steps, resetting to a
/// fresh spawn after every crash and counting on; deterministic per seed.
inline EvalReport evaluate(const NAFPolicy& policy, sim::LidarSim& env,
                           long steps, std::uint64_t seed,
                           bool record_trace = false) {
  if (policy.state_dim() != env.state_dim() ||
      policy.action_dim() != env.action_dim()) {
    throw std::invalid_argument("evaluate: policy/map dimension mismatch");
  }
  std::mt19937_64 rng(seed);
  EvalReport report;
  double total = 0.0;
  Eigen::VectorXd obs = env.reset(rng);
  for (long t = 0; t < steps; ++t) {
    const Eigen::VectorXd a = greedy_action(policy, obs);
    if (record_trace) {
      report.obs_trace.push_back(obs);
      report.action_trace.push_back(a);
    }
    EnvStep es = env.step(a);
    total += es.reward;
    ++report.steps;
    if (es.done) {
      ++report.crashes;
      obs = env.reset(rng);
    } else {
      obs = es.obs;
    }
  }
  report.total_reward = std::llround(total);
  return report;
}

inline EvalReport evaluate(const NAFPolicy& policy, const sim::WorldMap& map,
                           long steps, std::uint64_t seed,
                           const sim::SimConfig& cfg = sim::SimConfig(),
                           bool record_trace = false) {
  sim::LidarSim env(map, cfg);
  return evaluate(policy, env, steps, seed, record_trace);
}

struct CrossvalResult {
  std::vector<std::string> policy_names;  // rows
  std::vector<std::string> map_names;     // columns
  Eigen::MatrixXd rewards;                // |policies| x |maps|
};

/// Every policy on every map, same seed per cell.
inline CrossvalResult cross_validate(const std::vector<NAFPolicy>& policies,
                                     const std::vector<std::string>& policy_names,
                                     const std::vector<sim::WorldMap>& maps,
                                     long steps, std::uint64_t seed,
                                     const sim::SimConfig& cfg = sim::SimConfig()) {
  if (policies.size() != policy_names.size()) {
    throw std::invalid_argument("cross_validate: name/policy count mismatch");
  }
  CrossvalResult out;
  out.policy_names = policy_names;
  out.rewards.resize(static_cast<Eigen::Index>(policies.size()),
                     static_cast<Eigen::Index>(maps.size()));
  for (const sim::WorldMap& m : maps) out.map_names.push_back(m.name);
  for (std::size_t i = 0; i < policies.size(); ++i) {
    for (std::size_t j = 0; j < maps.size(); ++j) {
      out.rewards(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<double>(
              evaluate(policies[i], maps[j], steps, seed, cfg).total_reward);
    }
  }
  return out;
}

inline void write_crossval_csv(std::ostream& out, const CrossvalResult& r) {
  out << "policy";
  for (const std::string& m : r.map_names) out << "," << m;
  out << "\n";
  for (Eigen::Index i = 0; i < r.rewards.rows(); ++i) {
    out << r.policy_names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < r.rewards.cols(); ++j) {
      out << "," << static_cast<long long>(r.rewards(i, j));
    }
    out << "\n";
  }
}

inline void write_metrics_csv(std::ostream& out,
                              const std::vector<StepRecord>& steps) {
  out << "step,episode,reward,delta,model_order\n";
  char buf[160];
  for (const StepRecord& s : steps) {
    std::snprintf(buf, sizeof(buf), "%ld,%ld,%.17g,%.17g,%ld\n", s.step,
                  s.episode, s.reward, s.delta, s.model_order);
    out << buf;
  }
}

}  // namespace knaf
