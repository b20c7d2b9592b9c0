#pragma once

#include <Eigen/Dense>

namespace vitk {

/// Matrix exponential by scaling and squaring with the Pade degree chosen
/// from the 1-norm (degrees 3, 5, 7, 9, 13 with Higham's 2005 thresholds).
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

/// Frechet derivative L(A, E) = d/dh exp(A + hE) at h = 0, read off the
/// upper-right block of exp([[A, E], [0, A]]).
Eigen::MatrixXd expm_frechet(const Eigen::MatrixXd& a, const Eigen::MatrixXd& e);

}  // namespace vitk
