#pragma once

#include <span>
#include <utility>

#include <Eigen/Dense>

#include "vitk/generator.hpp"

namespace vitk {

enum class EdmdMode {
  SmallStep,  // A = (K - I) / dt, first order in dt
  MatrixLog,  // A = log(K) / dt, principal logarithm
};

/// Least-squares generator estimate from snapshot pairs.  `before` and
/// `after` hold one latent state per column.  The one-step map is
/// K = G' G^T (G G^T + ridge I)^-1.
Eigen::MatrixXd edmd_fit(const Eigen::MatrixXd& before, const Eigen::MatrixXd& after, double dt, double ridge,
                         EdmdMode mode = EdmdMode::MatrixLog);

Eigen::MatrixXd edmd_fit(std::span<const std::pair<LatentState, LatentState>> pairs, double dt, double ridge,
                         EdmdMode mode = EdmdMode::MatrixLog);

}  // namespace vitk
