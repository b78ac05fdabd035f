#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>

#include "knaf/kernel.hpp"

namespace knaf {

/// Diagonal jitter added to Gram matrices before solving; coincident or
/// near-coincident centers otherwise make the system singular.
inline constexpr double kGramJitter = 1e-8;

/// A function in the RKHS stored as a kernel expansion over a dictionary:
///   f(s) = sum_n weights.row(n)^T * kappa(centers.row(n), s)
/// with vector-valued output of dimension `output_dim` (one weight column per
/// output coordinate). N = 0 rows is the identically-zero function.
///
/// Models are immutable: every operation returns a new model, so read-only
/// sharing across threads is safe.
class SparseKernelModel {
public:
  SparseKernelModel(GaussianKernel kernel, int output_dim)
      : kernel_(std::move(kernel)),
        centers_(0, kernel_.dim()),
        weights_(0, output_dim) {
    if (output_dim <= 0) {
      throw std::invalid_argument("SparseKernelModel: output_dim must be > 0");
    }
  }

  SparseKernelModel(GaussianKernel kernel, Eigen::MatrixXd centers,
                    Eigen::MatrixXd weights)
      : kernel_(std::move(kernel)),
        centers_(std::move(centers)),
        weights_(std::move(weights)) {
    if (centers_.rows() != weights_.rows()) {
      throw std::invalid_argument(
          "SparseKernelModel: centers/weights row count mismatch");
    }
    if (centers_.rows() > 0 && centers_.cols() != kernel_.dim()) {
      throw std::invalid_argument(
          "SparseKernelModel: center dimension does not match kernel");
    }
    if (weights_.cols() <= 0) {
      throw std::invalid_argument("SparseKernelModel: output_dim must be > 0");
    }
    if (centers_.rows() == 0 && centers_.cols() != kernel_.dim()) {
      centers_.resize(0, kernel_.dim());
    }
  }

  int order() const { return static_cast<int>(centers_.rows()); }
  int state_dim() const { return kernel_.dim(); }
  int output_dim() const { return static_cast<int>(weights_.cols()); }

  const GaussianKernel& kernel() const { return kernel_; }
  const Eigen::MatrixXd& centers() const { return centers_; }
  const Eigen::MatrixXd& weights() const { return weights_; }

  Eigen::VectorXd eval(const Eigen::VectorXd& s) const {
    if (order() == 0) {
      if (s.size() != kernel_.dim()) {
        throw std::invalid_argument("SparseKernelModel: eval dim mismatch");
      }
      return Eigen::VectorXd::Zero(output_dim());
    }
    return weights_.transpose() * kernel_.eval_centers(centers_, s);
  }

  /// Adds `w * kappa(s, .)` to the function. If `s` coincides bitwise with an
  /// existing center its weight row is incremented, otherwise the dictionary
  /// grows by one row.
  SparseKernelModel add_center(const Eigen::VectorXd& s,
                               const Eigen::VectorXd& w) const {
    if (s.size() != kernel_.dim() || w.size() != weights_.cols()) {
      throw std::invalid_argument("SparseKernelModel: add_center dim mismatch");
    }
    for (Eigen::Index n = 0; n < centers_.rows(); ++n) {
      if (centers_.row(n) == s.transpose()) {
        Eigen::MatrixXd weights = weights_;
        weights.row(n) += w.transpose();
        return SparseKernelModel(kernel_, centers_, std::move(weights));
      }
    }
    Eigen::MatrixXd centers(centers_.rows() + 1, kernel_.dim());
    Eigen::MatrixXd weights(weights_.rows() + 1, weights_.cols());
    centers.topRows(centers_.rows()) = centers_;
    weights.topRows(weights_.rows()) = weights_;
    centers.row(centers_.rows()) = s.transpose();
    weights.row(weights_.rows()) = w.transpose();
    return SparseKernelModel(kernel_, std::move(centers), std::move(weights));
  }

  SparseKernelModel scale_weights(double factor) const {
    return SparseKernelModel(kernel_, centers_, weights_ * factor);
  }

private:
  GaussianKernel kernel_;
  Eigen::MatrixXd centers_;  // N x p
  Eigen::MatrixXd weights_;  // N x d
};

namespace detail {

inline void check_compatible(const SparseKernelModel& a,
                             const SparseKernelModel& b) {
  if (!a.kernel().same_params(b.kernel())) {
    throw std::invalid_argument("SparseKernelModel: kernel params mismatch");
  }
  if (a.output_dim() != b.output_dim()) {
    throw std::invalid_argument("SparseKernelModel: output dim mismatch");
  }
}

}  // namespace detail

/// Concatenates the expansions; the result evaluates to eval(a,s) + eval(b,s).
inline SparseKernelModel concat(const SparseKernelModel& a,
                                const SparseKernelModel& b) {
  detail::check_compatible(a, b);
  Eigen::MatrixXd centers(a.order() + b.order(), a.state_dim());
  Eigen::MatrixXd weights(a.order() + b.order(), a.output_dim());
  centers.topRows(a.order()) = a.centers();
  centers.bottomRows(b.order()) = b.centers();
  weights.topRows(a.order()) = a.weights();
  weights.bottomRows(b.order()) = b.weights();
  return SparseKernelModel(a.kernel(), std::move(centers), std::move(weights));
}

/// RKHS inner product <a, b>_H summed over output coordinates:
/// sum_d w_a(:,d)^T K_ab w_b(:,d), with K_ab the cross-Gram of the centers.
inline double hilbert_inner(const SparseKernelModel& a,
                            const SparseKernelModel& b) {
  detail::check_compatible(a, b);
  if (a.order() == 0 || b.order() == 0) return 0.0;
  const Eigen::MatrixXd k = a.kernel().gram(a.centers(), b.centers());
  return (a.weights().transpose() * k * b.weights()).trace();
}

/// Squared RKHS distance ||a - b||_H^2, computed from the Gram matrix of the
/// union of centers and clamped at zero against roundoff.
inline double hilbert_dist_sq(const SparseKernelModel& a,
                              const SparseKernelModel& b) {
  detail::check_compatible(a, b);
  const SparseKernelModel diff = concat(a, b.scale_weights(-1.0));
  const double d2 = hilbert_inner(diff, diff);
  return d2 < 0.0 ? 0.0 : d2;
}

inline double hilbert_norm_sq(const SparseKernelModel& m) {
  const double n2 = hilbert_inner(m, m);
  return n2 < 0.0 ? 0.0 : n2;
}

}  // namespace knaf
