#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace knaf {

/// Gaussian (RBF) kernel with one positive lengthscale per state dimension.
///
/// The `bandwidth` vector b holds lengthscales: the kernel uses the precision
/// matrix diag(1/b_i^2), so
///   kappa(x, y) = exp(-1/2 * sum_i ((x_i - y_i) / b_i)^2).
/// kappa(x, x) = 1 and 0 < kappa(x, y) <= 1 for all inputs.
class GaussianKernel {
public:
  explicit GaussianKernel(Eigen::VectorXd bandwidth)
      : bandwidth_(std::move(bandwidth)) {
    if (bandwidth_.size() == 0) {
      throw std::invalid_argument("GaussianKernel: empty bandwidth vector");
    }
    if ((bandwidth_.array() <= 0.0).any()) {
      throw std::invalid_argument("GaussianKernel: lengthscales must be > 0");
    }
    inv_sq_ = bandwidth_.array().square().inverse();
  }

  /// Isotropic convenience: the same lengthscale replicated over `dim` axes.
  GaussianKernel(double lengthscale, int dim)
      : GaussianKernel(Eigen::VectorXd::Constant(dim, lengthscale)) {}

  int dim() const { return static_cast<int>(bandwidth_.size()); }
  const Eigen::VectorXd& bandwidth() const { return bandwidth_; }

  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    check_dim(x);
    check_dim(y);
    const double d2 = ((x - y).array().square() * inv_sq_).sum();
    return std::exp(-0.5 * d2);
  }

  /// Column vector of kappa(centers.row(n), s) for all n.
  Eigen::VectorXd eval_centers(const Eigen::MatrixXd& centers,
                               const Eigen::VectorXd& s) const {
    check_dim(s);
    if (centers.rows() > 0 && centers.cols() != dim()) {
      throw std::invalid_argument("GaussianKernel: center dimension mismatch");
    }
    Eigen::VectorXd out(centers.rows());
    for (Eigen::Index n = 0; n < centers.rows(); ++n) {
      const double d2 =
          ((centers.row(n).transpose() - s).array().square() * inv_sq_).sum();
      out(n) = std::exp(-0.5 * d2);
    }
    return out;
  }

  /// Gram matrix K(i,j) = kappa(A.row(i), B.row(j)).
  Eigen::MatrixXd gram(const Eigen::MatrixXd& a,
                       const Eigen::MatrixXd& b) const {
    if ((a.rows() > 0 && a.cols() != dim()) ||
        (b.rows() > 0 && b.cols() != dim())) {
      throw std::invalid_argument("GaussianKernel: gram dimension mismatch");
    }
    // Scale rows by 1/b, then use the squared-distance expansion.
    const Eigen::VectorXd scale = inv_sq_.sqrt().matrix();
    const Eigen::MatrixXd as = a * scale.asDiagonal();
    const Eigen::MatrixXd bs = b * scale.asDiagonal();
    const Eigen::VectorXd an = as.rowwise().squaredNorm();
    const Eigen::VectorXd bn = bs.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = -2.0 * as * bs.transpose();
    d2.colwise() += an;
    d2.rowwise() += bn.transpose();
    return (-0.5 * d2.array().max(0.0)).exp();
  }

  bool same_params(const GaussianKernel& other) const {
    return bandwidth_.size() == other.bandwidth_.size() &&
           bandwidth_ == other.bandwidth_;
  }

private:
  void check_dim(const Eigen::VectorXd& v) const {
    if (v.size() != bandwidth_.size()) {
      throw std::invalid_argument("GaussianKernel: input dimension mismatch");
    }
  }

  Eigen::VectorXd bandwidth_;
  Eigen::ArrayXd inv_sq_;  // 1 / b_i^2
};

/// Free-function form used throughout the tests.
inline double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                          const GaussianKernel& k) {
  return k(x, y);
}

}  // namespace knaf
