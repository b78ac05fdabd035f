#pragma once

#include <Eigen/Dense>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "knaf/sparse_model.hpp"

namespace knaf::komp {

/// Pruning budget in Hilbert-norm units (not squared norm).
struct CompressionBudget {
  double epsilon = 0.0;

  explicit CompressionBudget(double eps) : epsilon(eps) {
    if (!(eps >= 0.0)) {
      throw std::invalid_argument("CompressionBudget: epsilon must be >= 0");
    }
  }
};

/// Least-squares projection of `target` onto the span of kernel sections at
/// `onto_centers`: solves (K_cc + jitter I) W = K_ct W_t per output column.
/// M = 0 returns the zero model.
inline SparseKernelModel project(const SparseKernelModel& target,
                                 const Eigen::MatrixXd& onto_centers) {
  const Eigen::Index m = onto_centers.rows();
  if (m == 0) {
    return SparseKernelModel(target.kernel(), target.output_dim());
  }
  if (onto_centers.cols() != target.state_dim()) {
    throw std::invalid_argument("komp::project: center dimension mismatch");
  }
  const GaussianKernel& kern = target.kernel();
  Eigen::MatrixXd kcc = kern.gram(onto_centers, onto_centers);
  kcc.diagonal().array() += kGramJitter;
  Eigen::MatrixXd rhs;
  if (target.order() == 0) {
    rhs = Eigen::MatrixXd::Zero(m, target.output_dim());
  } else {
    rhs = kern.gram(onto_centers, target.centers()) * target.weights();
  }
  Eigen::MatrixXd w = kcc.llt().solve(rhs);
  return SparseKernelModel(kern, onto_centers, std::move(w));
}

namespace detail {

inline Eigen::MatrixXd drop_row(const Eigen::MatrixXd& a, Eigen::Index r) {
  Eigen::MatrixXd out(a.rows() - 1, a.cols());
  out.topRows(r) = a.topRows(r);
  out.bottomRows(a.rows() - 1 - r) = a.bottomRows(a.rows() - 1 - r);
  return out;
}

inline Eigen::MatrixXd drop_row_col(const Eigen::MatrixXd& a, Eigen::Index r) {
  Eigen::MatrixXd tmp = drop_row(a, r);
  Eigen::MatrixXd out(tmp.rows(), tmp.cols() - 1);
  out.leftCols(r) = tmp.leftCols(r);
  out.rightCols(tmp.cols() - 1 - r) = tmp.rightCols(tmp.cols() - 1 - r);
  return out;
}

}  // namespace detail

/// Greedy destructive pruning: repeatedly removes the single center whose
/// removal (with re-projection of the remaining weights) stays closest to the
/// ORIGINAL function, measured in the Hilbert norm, and stops before the
/// distance would exceed the budget. Ties go to the lowest center index.
///
/// The candidate scores are computed with an exact rank-one downdate of the
/// jittered Gram inverse, which gives the same distances as re-solving the
/// projection for each candidate.
inline SparseKernelModel compress(const SparseKernelModel& m,
                                  const CompressionBudget& budget) {
  const int n = m.order();
  if (n == 0) return m;

  const GaussianKernel& kern = m.kernel();
  const double jitter = kGramJitter;

  Eigen::MatrixXd k_full = kern.gram(m.centers(), m.centers());
  const double mnorm2 =
      (m.weights().transpose() * k_full * m.weights()).trace();

  // Removals with distance at redundancy level (exact duplicates or
  // cancellations) must pass even when epsilon = 0.
  const double budget2 =
      budget.epsilon * budget.epsilon + 1e-13 * (1.0 + mnorm2);

  // Working state on the kept subset, physically compacted each removal.
  Eigen::MatrixXd k = k_full;
  Eigen::MatrixXd kp = k_full;
  kp.diagonal().array() += jitter;
  Eigen::MatrixXd c =
      kp.llt().solve(Eigen::MatrixXd::Identity(n, n));      // (K + jI)^-1
  Eigen::MatrixXd b = k_full * m.weights();                 // K_{S,orig} W
  std::vector<int> kept(n);
  std::iota(kept.begin(), kept.end(), 0);

  bool removed_any = false;
  while (!kept.empty()) {
    const Eigen::Index msz = static_cast<Eigen::Index>(kept.size());
    const Eigen::MatrixXd beta = c * b;
    const double cur_d2 = mnorm2 - (beta.transpose() * b).trace() -
                          jitter * beta.squaredNorm();
    const Eigen::MatrixXd cbeta = c * beta;

    Eigen::Index best = -1;
    double best_score = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < msz; ++i) {
      const double cii = c(i, i);
      if (!(cii > 0.0)) continue;
      const double bn2 = beta.row(i).squaredNorm();
      const double cross = cbeta.row(i).dot(beta.row(i));
      const double colsq = c.col(i).squaredNorm();
      const double score = cur_d2 + bn2 / cii +
                           jitter * (2.0 * cross / cii - colsq * bn2 / (cii * cii));
      if (score < best_score) {
        best_score = score;
        best = i;
      }
    }
    if (best < 0 || best_score > budget2) break;

    // Downdate: remove row/col `best` from the inverse and shrink the rest.
    const Eigen::VectorXd u = c.col(best);
    const double cbb = c(best, best);
    c = detail::drop_row_col(c, best);
    const Eigen::VectorXd usub = detail::drop_row(u, best);
    c.noalias() -= (usub * usub.transpose()) / cbb;
    k = detail::drop_row_col(k, best);
    b = detail::drop_row(b, best);
    kept.erase(kept.begin() + best);
    removed_any = true;
  }

  if (!removed_any) return m;
  if (kept.empty()) return SparseKernelModel(kern, m.output_dim());

  Eigen::MatrixXd kept_centers(static_cast<Eigen::Index>(kept.size()),
                               m.state_dim());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    kept_centers.row(static_cast<Eigen::Index>(i)) = m.centers().row(kept[i]);
  }
  return project(m, kept_centers);
}

inline SparseKernelModel compress(const SparseKernelModel& m, double epsilon) {
  return compress(m, CompressionBudget(epsilon));
}

}  // namespace knaf::komp
