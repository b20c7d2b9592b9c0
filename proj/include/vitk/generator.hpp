#pragma once

#include <complex>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace vitk {

using LatentState = Eigen::VectorXd;

/// d/2 decoupled modes; block i is [[-gamma_i, -omega_i], [omega_i, -gamma_i]]
/// with gamma_i = softplus(raw_gamma_i) >= 0.
struct BlockDiagGenerator {
  Eigen::VectorXd raw_gamma;
  Eigen::VectorXd omega;

  int dim() const { return static_cast<int>(2 * raw_gamma.size()); }
  Eigen::VectorXd gamma() const;

  /// Builds the raw parameters that realise the given decay rates.
  static BlockDiagGenerator from_rates(const Eigen::VectorXd& gamma, const Eigen::VectorXd& omega);
};

/// A = S + W with S = -L L^T (L lower triangular) and W = (W_raw - W_raw^T)/2.
/// Entries of `lower` above the diagonal are ignored.
struct DenseStableGenerator {
  Eigen::MatrixXd lower;
  Eigen::MatrixXd skew_source;

  int dim() const { return static_cast<int>(lower.rows()); }
  Eigen::MatrixXd symmetric_part() const;
  Eigen::MatrixXd skew_part() const;
};

using Generator = std::variant<BlockDiagGenerator, DenseStableGenerator>;

enum class BlockInit { Dissipative, Conservative };

/// Dissipative: gamma = 0.1, omega evenly spaced on [0, pi].
/// Conservative: gamma = 1e-3, omega evenly spaced on [0, 4 pi].
BlockDiagGenerator init_block_generator(int latent_dim, BlockInit init);

int generator_dim(const Generator& gen);
Eigen::MatrixXd assemble(const Generator& gen);

/// exp(tau A); closed form for the block-diagonal case.
Eigen::MatrixXd transition_matrix(const Generator& gen, double tau);

LatentState evolve(const Generator& gen, const LatentState& g0, double tau);
std::vector<LatentState> evolve_recursive(const Generator& gen, const LatentState& g0, double dt, int n_steps);

/// ||exp(tA)||_2 from the largest singular value.
double spectral_norm_expm(const Generator& gen, double t);

std::vector<std::complex<double>> spectrum(const Generator& gen);

/// Maps time features [sin(2 pi f t), cos(2 pi f t)] through
/// 2 -> hidden -> hidden -> d with GELU activations.
struct ForcingHead {
  double frequency = 1.0;
  Eigen::MatrixXd w1, w2, w3;  // [out, in]
  Eigen::VectorXd b1, b2, b3;

  int dim() const { return static_cast<int>(w3.rows()); }
  Eigen::VectorXd operator()(double t) const;
};

Eigen::Vector2d forcing_features(double frequency, double t);

/// exp((t - t0) A) g0 + head(t).
LatentState forced_evolve(const Generator& gen, const ForcingHead& head, const LatentState& g0, double t0,
                          double t);

}  // namespace vitk
