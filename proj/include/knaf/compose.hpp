#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "knaf/naf_policy.hpp"

namespace knaf {

/// Visit-count proxy from the stored kernel mean embedding rho.
inline double kme_density(const NAFPolicy& p, const Eigen::VectorXd& s) {
  return p.density(s);
}

/// Unit-weight density of the dictionary itself: sum_k kappa(s, s_k).
inline double dict_density(const NAFPolicy& p, const Eigen::VectorXd& s) {
  if (p.order() == 0) return 0.0;
  return p.kernel().eval_centers(p.centers(), s).sum();
}

enum class DensityMode { kKme, kDict };

struct ComposeOptions {
  double epsilon = 3.0;              // final KOMP budget
  DensityMode mode = DensityMode::kKme;
  std::uint64_t seed = 0;            // visitation order
  bool multipass = false;            // re-run the interpolation loop
  double residual_tol = 1e-3;        // multipass stop criterion
  int max_passes = 10;
};

/// One conflict-resolution decision at a candidate dictionary point.
struct ComposeEvent {
  int policy = 0;        // origin policy index
  int center = 0;        // center row within that policy
  double own_density = 0.0;
  double rival_density = 0.0;  // max over the other policies, -inf if none
  bool accepted = false;
  bool tie = false;
};

struct ComposeResult {
  NAFPolicy policy;
  std::vector<ComposeEvent> log;
  int passes = 1;
};

/// Merges trained policies into one: visits all candidate dictionary points
/// uniformly at random, keeps a point only where its origin policy has
/// strictly the highest visitation density, and interpolates the composite
/// through the kept points so that right after each update the composite
/// reproduces the origin's values there. V, L and rho are merged by the same
/// rule as pi, so the result is a full policy and can be composed again.
/// Never touches an environment: a pure function of the stored models.
inline ComposeResult compose(const std::vector<NAFPolicy>& candidates,
                             const ComposeOptions& opts) {
  if (candidates.empty()) {
    throw std::invalid_argument("compose: need at least one policy");
  }
  const NAFPolicy& first = candidates.front();
  for (const NAFPolicy& p : candidates) {
    if (!p.kernel().same_params(first.kernel())) {
      throw std::invalid_argument("compose: kernel params mismatch");
    }
    if (p.action_dim() != first.action_dim() ||
        p.state_dim() != first.state_dim()) {
      throw std::invalid_argument("compose: state/action dims mismatch");
    }
  }

  const int q = first.action_dim();
  const double l0 = first.l0();
  const int n_policies = static_cast<int>(candidates.size());

  std::vector<std::pair<int, int>> points;  // (policy, center row)
  for (int i = 0; i < n_policies; ++i) {
    for (int j = 0; j < candidates[i].order(); ++j) {
      points.emplace_back(i, j);
    }
  }
  std::mt19937_64 rng(opts.seed);
  std::shuffle(points.begin(), points.end(), rng);

  const auto density_at = [&](int i, const Eigen::VectorXd& s) {
    return opts.mode == DensityMode::kKme ? kme_density(candidates[i], s)
                                          : dict_density(candidates[i], s);
  };

  // Stacked interpolation target of policy i at s, expressed relative to the
  // composite's own l0 offset so the full L functions match after the update.
  const auto target_at = [&](int i, const Eigen::VectorXd& s) {
    const NAFPolicy& p = candidates[i];
    Eigen::VectorXd t = p.stacked_eval(s);
    const double l0_shift = p.l0() - l0;
    for (int r = 0; r < q; ++r) {
      t(p.l_col() + r * q + r) += l0_shift;
    }
    return t;
  };

  NAFPolicy composite(first.kernel(), first.action_low(), first.action_high(),
                      l0);
  ComposeResult out{composite, {}, 1};
  std::vector<std::pair<int, int>> accepted;

  for (const auto& [i, j] : points) {
    const Eigen::VectorXd s = candidates[i].centers().row(j).transpose();
    const double own = density_at(i, s);
    double rival = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_policies; ++k) {
      if (k != i) rival = std::max(rival, density_at(k, s));
    }
    ComposeEvent ev{i, j, own, rival, own > rival, own == rival};
    out.log.push_back(ev);
    if (!ev.accepted) continue;
    accepted.emplace_back(i, j);
    composite = composite.add_center(
        s, target_at(i, s) - composite.stacked_eval(s));
  }

  if (opts.multipass) {
    for (int pass = 1; pass < opts.max_passes; ++pass) {
      double residual = 0.0;
      for (const auto& [i, j] : accepted) {
        const Eigen::VectorXd s = candidates[i].centers().row(j).transpose();
        const Eigen::VectorXd diff =
            candidates[i].policy_mean(s) - composite.policy_mean(s);
        residual = std::max(residual, diff.cwiseAbs().maxCoeff());
      }
      if (residual <= opts.residual_tol) break;
      std::shuffle(accepted.begin(), accepted.end(), rng);
      for (const auto& [i, j] : accepted) {
        const Eigen::VectorXd s = candidates[i].centers().row(j).transpose();
        composite = composite.add_center(
            s, target_at(i, s) - composite.stacked_eval(s));
      }
      out.passes = pass + 1;
    }
  }

  out.policy = compress_policy(composite, opts.epsilon);
  return out;
}

}  // namespace knaf
