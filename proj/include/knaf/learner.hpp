#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "knaf/env.hpp"
#include "knaf/naf_policy.hpp"

namespace knaf {

/// One environment sample (s, a, r, s', done).
struct Transition {
  Eigen::VectorXd s;
  Eigen::VectorXd a;
  double r = 0.0;
  Eigen::VectorXd s_next;
  bool done = false;
};

struct TrainConfig {
  double alpha = 0.25;   // V step size
  double beta = 0.25;    // pi step size
  double zeta = 0.001;   // L step size
  double epsilon = 3.0;  // KOMP budget (Hilbert norm)
  Eigen::VectorXd sigma_explore;  // q exploration std-devs
  double gamma = 0.99;
  double l0 = 0.01;
  double lambda = 0.0;   // Hilbert-norm shrinkage; 0 = plain semi-gradient
  long max_steps = 100000;
  long episode_max_len = 5000;
  std::uint64_t seed = 0;
  Eigen::VectorXd bandwidth;  // p kernel lengthscales
  bool enable_compression = true;

  void validate(int state_dim, int action_dim) const {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(zeta > 0.0)) {
      throw std::invalid_argument("TrainConfig: step sizes must be > 0");
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) {
      throw std::invalid_argument("TrainConfig: gamma must be in [0, 1)");
    }
    if (!(epsilon >= 0.0) || !(lambda >= 0.0)) {
      throw std::invalid_argument("TrainConfig: epsilon/lambda must be >= 0");
    }
    if (max_steps < 0 || episode_max_len <= 0) {
      throw std::invalid_argument("TrainConfig: bad step budgets");
    }
    if (sigma_explore.size() != action_dim ||
        (sigma_explore.array() < 0.0).any()) {
      throw std::invalid_argument("TrainConfig: bad sigma_explore");
    }
    if (bandwidth.size() != state_dim || (bandwidth.array() <= 0.0).any()) {
      throw std::invalid_argument("TrainConfig: bad bandwidth");
    }
  }
};

struct TdError {
  double y = 0.0;
  double delta = 0.0;
};

/// Bootstrapped target y = r + gamma V(s') (y = r on terminal transitions)
/// and Bellman error delta = y - Q(s, a).
inline TdError td_error(const NAFPolicy& p, const Transition& t,
                        double gamma) {
  TdError e;
  e.y = t.r + (t.done ? 0.0 : gamma * p.value(t.s_next));
  e.delta = e.y - q_value(p, t.s, t.a);
  return e;
}

/// One semi-gradient TD update at the sampled state. Appends (or fuses) a
/// dictionary center at s with stacked weight row
///   dV   = alpha * delta
///   dpi  = beta  * delta * L^T L (a - pi(s))
///   dL   = -zeta * delta * L (a - pi(s)) (a - pi(s))^T     (row-major)
///   drho = 1
/// which are the exact loss derivatives of 1/2 (y - Q)^2 with y held fixed.
/// With lambda > 0 the pre-existing V/pi/L weights are first shrunk by
/// (1 - step * lambda) with each block's own step size; rho is a pure
/// visitation count and is never shrunk.
inline NAFPolicy gradient_step(const NAFPolicy& p, const Transition& t,
                               const TrainConfig& cfg) {
  const int q = p.action_dim();
  const Eigen::VectorXd stacked = p.stacked_eval(t.s);
  const Eigen::VectorXd u = t.a - stacked.segment(p.pi_col(), q);
  const Eigen::MatrixXd l = p.advantage_factor_from(stacked);
  const double y = t.r + (t.done ? 0.0 : cfg.gamma * p.value(t.s_next));
  const double delta =
      y - (stacked(NAFPolicy::value_col()) - 0.5 * (l * u).squaredNorm());

  Eigen::VectorXd row = Eigen::VectorXd::Zero(p.stacked_dim());
  row(NAFPolicy::value_col()) = cfg.alpha * delta;
  row.segment(p.pi_col(), q) = cfg.beta * delta * (l.transpose() * l) * u;
  const Eigen::MatrixXd dl = -cfg.zeta * delta * (l * u) * u.transpose();
  for (int r = 0; r < q; ++r) {
    for (int c = 0; c < q; ++c) {
      row(p.l_col() + r * q + c) = dl(r, c);
    }
  }
  row(p.rho_col()) = 1.0;

  if (cfg.lambda > 0.0 && p.order() > 0) {
    Eigen::MatrixXd w = p.stacked_weights();
    w.col(NAFPolicy::value_col()) *= 1.0 - cfg.alpha * cfg.lambda;
    w.middleCols(p.pi_col(), q) *= 1.0 - cfg.beta * cfg.lambda;
    w.middleCols(p.l_col(), q * q) *= 1.0 - cfg.zeta * cfg.lambda;
    return p.with_dictionary(p.centers(), std::move(w)).add_center(t.s, row);
  }
  return p.add_center(t.s, row);
}

struct StepRecord {
  long step = 0;
  long episode = 0;
  double reward = 0.0;
  double delta = 0.0;
  long model_order = 0;
};

struct EpisodeRecord {
  long episode = 0;
  double reward = 0.0;
  long length = 0;
  bool crashed = false;  // false means the episode hit episode_max_len
};

struct TrainResult {
  NAFPolicy policy;
  std::vector<StepRecord> steps;
  std::vector<EpisodeRecord> episodes;  // completed episodes only
};

/// Online single-sample Q-learning loop: explore, TD update, joint KOMP.
/// Episodes end on a terminal step or at episode_max_len; only terminal steps
/// drop the bootstrap term. Deterministic for a fixed seed and config.
template <class Env>
TrainResult train(Env& env, const TrainConfig& cfg) {
  cfg.validate(env.state_dim(), env.action_dim());
  std::mt19937_64 rng(cfg.seed);

  NAFPolicy policy(GaussianKernel(cfg.bandwidth), env.action_low(),
                   env.action_high(), cfg.l0);
  TrainResult out{policy, {}, {}};
  out.steps.reserve(static_cast<std::size_t>(cfg.max_steps));

  Eigen::VectorXd obs = env.reset(rng);
  long episode = 0;
  long ep_len = 0;
  double ep_reward = 0.0;

  for (long step = 0; step < cfg.max_steps; ++step) {
    Transition t;
    t.s = obs;
    t.a = explore_action(policy, obs, cfg.sigma_explore, rng);
    EnvStep es = env.step(t.a);
    t.r = es.reward;
    t.s_next = es.obs;
    t.done = es.done;

    const TdError e = td_error(policy, t, cfg.gamma);
    policy = gradient_step(policy, t, cfg);
    if (cfg.enable_compression) {
      policy = compress_policy(policy, cfg.epsilon);
    }
    if (!policy.stacked_weights().allFinite()) {
      throw std::runtime_error("train: non-finite weight at step " +
                               std::to_string(step));
    }

    out.steps.push_back({step, episode, es.reward, e.delta, policy.order()});
    ep_len += 1;
    ep_reward += es.reward;

    if (es.done || ep_len >= cfg.episode_max_len) {
      out.episodes.push_back({episode, ep_reward, ep_len, es.done});
      episode += 1;
      ep_len = 0;
      ep_reward = 0.0;
      obs = env.reset(rng);
    } else {
      obs = es.obs;
    }
  }
  out.policy = std::move(policy);
  return out;
}

}  // namespace knaf
