#pragma once

#include <Eigen/Dense>
#include <random>

namespace knaf {

/// One environment step: next observation, instantaneous reward, terminal flag.
struct EnvStep {
  Eigen::VectorXd obs;
  double reward = 0.0;
  bool done = false;
};

// Environments are duck-typed; train() and evaluate() expect:
//   int state_dim() const;
//   int action_dim() const;
//   Eigen::VectorXd action_low() const;
//   Eigen::VectorXd action_high() const;
//   Eigen::VectorXd reset(std::mt19937_64& rng);
//   EnvStep step(const Eigen::VectorXd& action);

}  // namespace knaf
