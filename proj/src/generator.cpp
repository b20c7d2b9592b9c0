#include "vitk/generator.hpp"

#include <cmath>
#include <numbers>

#include "vitk/activations.hpp"
#include "vitk/errors.hpp"
#include "vitk/expm.hpp"

namespace vitk {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void check_latent(const LatentState& g, int d) {
  if (g.size() != d) throw PreconditionError("latent dimension does not match generator");
  if (!g.allFinite()) throw PreconditionError("latent state has non-finite entries");
}

void check_tau(double tau) {
  if (!(tau >= 0.0)) throw PreconditionError("evolution time must be non-negative");
}

}  // namespace

VectorXd BlockDiagGenerator::gamma() const { return raw_gamma.unaryExpr([](double r) { return softplus(r); }); }

BlockDiagGenerator BlockDiagGenerator::from_rates(const VectorXd& gamma, const VectorXd& omega) {
  if (gamma.size() != omega.size()) throw PreconditionError("gamma and omega sizes differ");
  BlockDiagGenerator gen;
  gen.raw_gamma = gamma.unaryExpr([](double g) {
    if (g < 0.0) throw PreconditionError("decay rates must be non-negative");
    // softplus never reaches zero exactly; a very negative pre-activation gives ~1e-44.
    return g == 0.0 ? -100.0 : inverse_softplus(g);
  });
  gen.omega = omega;
  return gen;
}

MatrixXd DenseStableGenerator::symmetric_part() const {
  const MatrixXd l = lower.triangularView<Eigen::Lower>();
  return -l * l.transpose();
}

MatrixXd DenseStableGenerator::skew_part() const { return 0.5 * (skew_source - skew_source.transpose()); }

BlockDiagGenerator init_block_generator(int latent_dim, BlockInit init) {
  if (latent_dim <= 0 || latent_dim % 2 != 0) {
    throw ConfigError("block-diagonal generator needs an even latent dimension, got " +
                      std::to_string(latent_dim));
  }
  const int modes = latent_dim / 2;
  const double gamma0 = init == BlockInit::Dissipative ? 0.1 : 1e-3;
  const double omega_max = init == BlockInit::Dissipative ? std::numbers::pi : 4.0 * std::numbers::pi;
  VectorXd omega(modes);
  for (int i = 0; i < modes; ++i) omega[i] = modes == 1 ? 0.0 : omega_max * i / (modes - 1);
  return BlockDiagGenerator::from_rates(VectorXd::Constant(modes, gamma0), omega);
}

int generator_dim(const Generator& gen) {
  return std::visit([](const auto& g) { return g.dim(); }, gen);
}

MatrixXd assemble(const Generator& gen) {
  return std::visit(Overloaded{[](const BlockDiagGenerator& g) {
                                 if (g.raw_gamma.size() != g.omega.size()) {
                                   throw ConfigError("block generator: gamma/omega size mismatch");
                                 }
                                 const VectorXd gamma = g.gamma();
                                 MatrixXd a = MatrixXd::Zero(g.dim(), g.dim());
                                 for (Eigen::Index i = 0; i < gamma.size(); ++i) {
                                   a(2 * i, 2 * i) = -gamma[i];
                                   a(2 * i, 2 * i + 1) = -g.omega[i];
                                   a(2 * i + 1, 2 * i) = g.omega[i];
                                   a(2 * i + 1, 2 * i + 1) = -gamma[i];
                                 }
                                 return a;
                               },
                               [](const DenseStableGenerator& g) -> MatrixXd {
                                 if (g.lower.rows() != g.lower.cols() || g.skew_source.rows() != g.lower.rows() ||
                                     g.skew_source.cols() != g.lower.cols()) {
                                   throw ConfigError("dense generator: factor shapes must be square and equal");
                                 }
                                 return g.symmetric_part() + g.skew_part();
                               }},
                    gen);
}

MatrixXd transition_matrix(const Generator& gen, double tau) {
  check_tau(tau);
  if (const auto* block = std::get_if<BlockDiagGenerator>(&gen)) {
    const VectorXd gamma = block->gamma();
    MatrixXd e = MatrixXd::Zero(block->dim(), block->dim());
    for (Eigen::Index i = 0; i < gamma.size(); ++i) {
      const double decay = std::exp(-gamma[i] * tau);
      const double c = std::cos(block->omega[i] * tau);
      const double s = std::sin(block->omega[i] * tau);
      e(2 * i, 2 * i) = decay * c;
      e(2 * i, 2 * i + 1) = -decay * s;
      e(2 * i + 1, 2 * i) = decay * s;
      e(2 * i + 1, 2 * i + 1) = decay * c;
    }
    return e;
  }
  return expm(tau * assemble(gen));
}

LatentState evolve(const Generator& gen, const LatentState& g0, double tau) {
  check_tau(tau);
  check_latent(g0, generator_dim(gen));
  if (tau == 0.0) return g0;
  if (const auto* block = std::get_if<BlockDiagGenerator>(&gen)) {
    const VectorXd gamma = block->gamma();
    LatentState out(g0.size());
    for (Eigen::Index i = 0; i < gamma.size(); ++i) {
      const double decay = std::exp(-gamma[i] * tau);
      const double c = std::cos(block->omega[i] * tau);
      const double s = std::sin(block->omega[i] * tau);
      const double a = g0[2 * i];
      const double b = g0[2 * i + 1];
      out[2 * i] = decay * (c * a - s * b);
      out[2 * i + 1] = decay * (s * a + c * b);
    }
    return out;
  }
  return transition_matrix(gen, tau) * g0;
}

std::vector<LatentState> evolve_recursive(const Generator& gen, const LatentState& g0, double dt, int n_steps) {
  if (!(dt > 0.0)) throw PreconditionError("evolve_recursive: dt must be positive");
  if (n_steps < 1) throw PreconditionError("evolve_recursive: n_steps must be >= 1");
  check_latent(g0, generator_dim(gen));
  const MatrixXd step = transition_matrix(gen, dt);
  std::vector<LatentState> states;
  states.reserve(static_cast<std::size_t>(n_steps));
  LatentState g = g0;
  for (int k = 0; k < n_steps; ++k) {
    g = step * g;
    states.push_back(g);
  }
  return states;
}

double spectral_norm_expm(const Generator& gen, double t) {
  check_tau(t);
  const MatrixXd e = transition_matrix(gen, t);
  Eigen::JacobiSVD<MatrixXd> svd(e);
  return svd.singularValues()[0];
}

std::vector<std::complex<double>> spectrum(const Generator& gen) {
  if (const auto* block = std::get_if<BlockDiagGenerator>(&gen)) {
    const VectorXd gamma = block->gamma();
    std::vector<std::complex<double>> eig;
    eig.reserve(static_cast<std::size_t>(block->dim()));
    for (Eigen::Index i = 0; i < gamma.size(); ++i) {
      eig.emplace_back(-gamma[i], block->omega[i]);
      eig.emplace_back(-gamma[i], -block->omega[i]);
    }
    return eig;
  }
  Eigen::EigenSolver<MatrixXd> solver(assemble(gen), false);
  const auto values = solver.eigenvalues();
  return {values.data(), values.data() + values.size()};
}

Eigen::Vector2d forcing_features(double frequency, double t) {
  const double phase = 2.0 * std::numbers::pi * frequency * t;
  return {std::sin(phase), std::cos(phase)};
}

VectorXd ForcingHead::operator()(double t) const {
  const auto act = [](double x) { return gelu(x); };
  const VectorXd h1 = (w1 * forcing_features(frequency, t) + b1).unaryExpr(act);
  const VectorXd h2 = (w2 * h1 + b2).unaryExpr(act);
  return w3 * h2 + b3;
}

LatentState forced_evolve(const Generator& gen, const ForcingHead& head, const LatentState& g0, double t0,
                          double t) {
  if (t < t0) throw PreconditionError("forced_evolve: target time precedes t0");
  if (head.dim() != generator_dim(gen)) throw PreconditionError("forcing head dimension mismatch");
  return evolve(gen, g0, t - t0) + head(t);
}

}  // namespace vitk
