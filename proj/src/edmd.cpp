#include "vitk/edmd.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "vitk/errors.hpp"

namespace vitk {

using Eigen::MatrixXd;

MatrixXd edmd_fit(const MatrixXd& before, const MatrixXd& after, double dt, double ridge, EdmdMode mode) {
  if (before.rows() != after.rows() || before.cols() != after.cols()) {
    throw PreconditionError("edmd_fit: snapshot matrices must have equal shapes");
  }
  if (before.cols() == 0) throw PreconditionError("edmd_fit: no snapshot pairs");
  if (!(dt > 0.0)) throw PreconditionError("edmd_fit: dt must be positive");
  if (ridge < 0.0) throw PreconditionError("edmd_fit: ridge must be non-negative");

  const auto d = before.rows();
  MatrixXd step;
  if (ridge == 0.0) {
    // Solve G^T K^T = G'^T in the least-squares sense.
    Eigen::ColPivHouseholderQR<MatrixXd> qr(before.transpose());
    if (qr.rank() < d) {
      throw NumericalError("edmd_fit: snapshot matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                           " < " + std::to_string(d) + "); use a positive ridge");
    }
    step = qr.solve(after.transpose()).transpose();
  } else {
    const MatrixXd gram = before * before.transpose() + ridge * MatrixXd::Identity(d, d);
    step = gram.llt().solve(before * after.transpose()).transpose();
  }

  MatrixXd a;
  if (mode == EdmdMode::SmallStep) {
    a = (step - MatrixXd::Identity(d, d)) / dt;
  } else {
    a = step.log() / dt;
  }
  if (!a.allFinite()) {
    throw NumericalError("edmd_fit: logarithm of the one-step map is not real; try the small-step mode");
  }
  return a;
}

MatrixXd edmd_fit(std::span<const std::pair<LatentState, LatentState>> pairs, double dt, double ridge,
                  EdmdMode mode) {
  if (pairs.empty()) throw PreconditionError("edmd_fit: no snapshot pairs");
  const auto d = pairs.front().first.size();
  MatrixXd before(d, static_cast<Eigen::Index>(pairs.size()));
  MatrixXd after(d, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    before.col(static_cast<Eigen::Index>(k)) = pairs[k].first;
    after.col(static_cast<Eigen::Index>(k)) = pairs[k].second;
  }
  return edmd_fit(before, after, dt, ridge, mode);
}

}  // namespace vitk
