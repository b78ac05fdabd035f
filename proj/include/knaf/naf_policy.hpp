#pragma once

#include <Eigen/Dense>
#include <random>
#include <stdexcept>
#include <utility>

#include "knaf/komp.hpp"
#include "knaf/sparse_model.hpp"

namespace knaf {

/// Action-value function with the normalized-advantage decomposition
///   Q(s, a) = V(s) - 1/2 (a - pi(s))^T L(s)^T L(s) (a - pi(s)),
/// where V, pi, L and a visitation-density estimate rho are kernel expansions
/// sharing one dictionary. The shared weight block is stored stacked,
/// one column group per function:
///   col 0            : V
///   cols 1 .. q      : pi
///   cols 1+q .. q+q^2: L, row-major
///   last col         : rho
/// L additionally carries the constant offset l0 * I, so the empty dictionary
/// represents V = 0, pi = 0, L = l0 I, rho = 0 exactly.
class NAFPolicy {
public:
  NAFPolicy(GaussianKernel kernel, Eigen::VectorXd action_low,
            Eigen::VectorXd action_high, double l0)
      : NAFPolicy(std::move(kernel), std::move(action_low),
                  std::move(action_high), l0, Eigen::MatrixXd(),
                  Eigen::MatrixXd()) {}

  NAFPolicy(GaussianKernel kernel, Eigen::VectorXd action_low,
            Eigen::VectorXd action_high, double l0, Eigen::MatrixXd centers,
            Eigen::MatrixXd stacked_weights)
      : kernel_(std::move(kernel)),
        action_low_(std::move(action_low)),
        action_high_(std::move(action_high)),
        l0_(l0),
        centers_(std::move(centers)),
        weights_(std::move(stacked_weights)) {
    if (action_low_.size() != action_high_.size() || action_low_.size() == 0) {
      throw std::invalid_argument("NAFPolicy: bad action bounds");
    }
    if ((action_low_.array() > action_high_.array()).any()) {
      throw std::invalid_argument("NAFPolicy: action_low above action_high");
    }
    const int d = stacked_dim();
    if (centers_.rows() == 0) {
      centers_.resize(0, kernel_.dim());
      weights_.resize(0, d);
    }
    if (centers_.rows() != weights_.rows() || weights_.cols() != d ||
        centers_.cols() != kernel_.dim()) {
      throw std::invalid_argument("NAFPolicy: dictionary shape mismatch");
    }
  }

  int state_dim() const { return kernel_.dim(); }
  int action_dim() const { return static_cast<int>(action_low_.size()); }
  int order() const { return static_cast<int>(centers_.rows()); }
  int stacked_dim() const { return 2 + action_dim() + action_dim() * action_dim(); }

  double l0() const { return l0_; }
  const GaussianKernel& kernel() const { return kernel_; }
  const Eigen::VectorXd& action_low() const { return action_low_; }
  const Eigen::VectorXd& action_high() const { return action_high_; }
  const Eigen::MatrixXd& centers() const { return centers_; }
  const Eigen::MatrixXd& stacked_weights() const { return weights_; }

  static constexpr int value_col() { return 0; }
  int pi_col() const { return 1; }
  int l_col() const { return 1 + action_dim(); }
  int rho_col() const { return 1 + action_dim() + action_dim() * action_dim(); }

  /// One kernel sweep over the dictionary; all four functions at once.
  Eigen::VectorXd stacked_eval(const Eigen::VectorXd& s) const {
    if (s.size() != state_dim()) {
      throw std::invalid_argument("NAFPolicy: state dimension mismatch");
    }
    if (order() == 0) return Eigen::VectorXd::Zero(stacked_dim());
    return weights_.transpose() * kernel_.eval_centers(centers_, s);
  }

  double value(const Eigen::VectorXd& s) const {
    return stacked_eval(s)(value_col());
  }

  /// pi(s): the unclipped greedy action mean.
  Eigen::VectorXd policy_mean(const Eigen::VectorXd& s) const {
    return stacked_eval(s).segment(pi_col(), action_dim());
  }

  /// L(s) = l0 I + kernel expansion, as a q x q matrix.
  Eigen::MatrixXd advantage_factor(const Eigen::VectorXd& s) const {
    return advantage_factor_from(stacked_eval(s));
  }

  Eigen::MatrixXd advantage_factor_from(const Eigen::VectorXd& stacked) const {
    const int q = action_dim();
    Eigen::MatrixXd l = Eigen::MatrixXd::Identity(q, q) * l0_;
    for (int r = 0; r < q; ++r) {
      for (int c = 0; c < q; ++c) {
        l(r, c) += stacked(l_col() + r * q + c);
      }
    }
    return l;
  }

  double density(const Eigen::VectorXd& s) const {
    return stacked_eval(s)(rho_col());
  }

  SparseKernelModel stacked_model() const {
    return SparseKernelModel(kernel_, centers_, weights_);
  }
  SparseKernelModel value_model() const { return block_model(value_col(), 1); }
  SparseKernelModel policy_model() const {
    return block_model(pi_col(), action_dim());
  }
  /// Kernel-expansion part of L only; the l0 I offset is not included.
  SparseKernelModel scale_model() const {
    return block_model(l_col(), action_dim() * action_dim());
  }
  SparseKernelModel density_model() const { return block_model(rho_col(), 1); }

  /// Same bounds/kernel/l0, new shared dictionary.
  NAFPolicy with_dictionary(Eigen::MatrixXd centers,
                            Eigen::MatrixXd stacked_weights) const {
    return NAFPolicy(kernel_, action_low_, action_high_, l0_,
                     std::move(centers), std::move(stacked_weights));
  }

  /// Adds one stacked weight row at s, fusing bitwise-equal centers.
  NAFPolicy add_center(const Eigen::VectorXd& s,
                       const Eigen::VectorXd& stacked_row) const {
    SparseKernelModel grown = stacked_model().add_center(s, stacked_row);
    return with_dictionary(grown.centers(), grown.weights());
  }

private:
  SparseKernelModel block_model(int col, int width) const {
    return SparseKernelModel(kernel_, centers_,
                             weights_.middleCols(col, width));
  }

  GaussianKernel kernel_;
  Eigen::VectorXd action_low_;
  Eigen::VectorXd action_high_;
  double l0_;
  Eigen::MatrixXd centers_;  // N x p
  Eigen::MatrixXd weights_;  // N x (2 + q + q^2)
};

/// A(s,a) = -1/2 ||L(s)(a - pi(s))||^2; zero at a = pi(s), never positive.
inline double advantage(const NAFPolicy& p, const Eigen::VectorXd& s,
                        const Eigen::VectorXd& a) {
  if (a.size() != p.action_dim()) {
    throw std::invalid_argument("advantage: action dimension mismatch");
  }
  const Eigen::VectorXd stacked = p.stacked_eval(s);
  const Eigen::VectorXd u =
      a - stacked.segment(p.pi_col(), p.action_dim());
  return -0.5 * (p.advantage_factor_from(stacked) * u).squaredNorm();
}

inline double q_value(const NAFPolicy& p, const Eigen::VectorXd& s,
                      const Eigen::VectorXd& a) {
  if (a.size() != p.action_dim()) {
    throw std::invalid_argument("q_value: action dimension mismatch");
  }
  const Eigen::VectorXd stacked = p.stacked_eval(s);
  const Eigen::VectorXd u = a - stacked.segment(p.pi_col(), p.action_dim());
  return stacked(NAFPolicy::value_col()) -
         0.5 * (p.advantage_factor_from(stacked) * u).squaredNorm();
}

inline Eigen::VectorXd clip_action(const NAFPolicy& p,
                                   const Eigen::VectorXd& a) {
  return a.cwiseMax(p.action_low()).cwiseMin(p.action_high());
}

/// argmax_a Q(s, a) in closed form: pi(s) clipped to the action box.
inline Eigen::VectorXd greedy_action(const NAFPolicy& p,
                                     const Eigen::VectorXd& s) {
  return clip_action(p, p.policy_mean(s));
}

/// Gaussian exploration around the unclipped mean, clipped afterwards.
/// sigma = 0 reproduces greedy_action; draws are deterministic per rng state.
inline Eigen::VectorXd explore_action(const NAFPolicy& p,
                                      const Eigen::VectorXd& s,
                                      const Eigen::VectorXd& sigma,
                                      std::mt19937_64& rng) {
  if (sigma.size() != p.action_dim()) {
    throw std::invalid_argument("explore_action: sigma dimension mismatch");
  }
  Eigen::VectorXd a = p.policy_mean(s);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a(i) += sigma(i) * unit(rng);
  }
  return clip_action(p, a);
}

/// Joint KOMP over the shared dictionary: all four functions are stacked into
/// one weight block, so each one's individual error is bounded by the budget.
inline NAFPolicy compress_policy(const NAFPolicy& p, double epsilon) {
  SparseKernelModel pruned =
      komp::compress(p.stacked_model(), komp::CompressionBudget(epsilon));
  return p.with_dictionary(pruned.centers(), pruned.weights());
}

}  // namespace knaf
