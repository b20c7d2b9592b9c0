#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <gtest/gtest.h>

#include "vitk/edmd.hpp"
#include "vitk/errors.hpp"
#include "vitk/experiments.hpp"
#include "vitk/expm.hpp"
#include "vitk/generator.hpp"

using namespace vitk;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using std::numbers::pi;

namespace {

BlockDiagGenerator block(std::initializer_list<double> gamma, std::initializer_list<double> omega) {
  VectorXd g(static_cast<Eigen::Index>(gamma.size())), w(static_cast<Eigen::Index>(omega.size()));
  int i = 0;
  for (double v : gamma) g(i++) = v;
  i = 0;
  for (double v : omega) w(i++) = v;
  return BlockDiagGenerator::from_rates(g, w);
}

BlockDiagGenerator random_block(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> n(0.0, 2.0);
  BlockDiagGenerator gen;
  gen.raw_gamma = VectorXd::NullaryExpr(m, [&] { return n(rng); });
  gen.omega = VectorXd::NullaryExpr(m, [&] { return 3.0 * n(rng); });
  return gen;
}

DenseStableGenerator random_dense(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> n(0.0, 1.0);
  DenseStableGenerator gen;
  gen.lower = MatrixXd::NullaryExpr(d, d, [&] { return n(rng); });
  gen.skew_source = MatrixXd::NullaryExpr(d, d, [&] { return 2.0 * n(rng); });
  return gen;
}

VectorXd random_vector(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> n(0.0, 1.0);
  return VectorXd::NullaryExpr(d, [&] { return n(rng); });
}

ForcingHead random_head(std::mt19937_64& rng, int d, int hidden, double f) {
  std::normal_distribution<double> n(0.0, 0.5);
  auto mat = [&](int r, int c) { return MatrixXd(MatrixXd::NullaryExpr(r, c, [&] { return n(rng); })); };
  ForcingHead h;
  h.frequency = f;
  h.w1 = mat(hidden, 2);
  h.w2 = mat(hidden, hidden);
  h.w3 = mat(d, hidden);
  h.b1 = mat(hidden, 1);
  h.b2 = mat(hidden, 1);
  h.b3 = mat(d, 1);
  return h;
}

}  // namespace

TEST(Expm, MatchesEigenReference) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int d : {1, 2, 5, 16}) {
    for (double s : {1e-3, 0.3, 2.0, 15.0}) {
      const MatrixXd a = s * MatrixXd::NullaryExpr(d, d, [&] { return n(rng); });
      const MatrixXd ref = a.exp();
      EXPECT_LE((expm(a) - ref).norm(), 1e-12 * std::max(1.0, ref.norm())) << "d=" << d << " s=" << s;
    }
  }
  EXPECT_EQ(expm(MatrixXd::Zero(3, 3)), MatrixXd::Identity(3, 3));
  EXPECT_THROW(expm(MatrixXd::Zero(2, 3)), PreconditionError);
}

TEST(Expm, FrechetMatchesFiniteDifference) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  const MatrixXd a = MatrixXd::NullaryExpr(4, 4, [&] { return n(rng); });
  const MatrixXd e = MatrixXd::NullaryExpr(4, 4, [&] { return n(rng); });
  const double h = 1e-6;
  const MatrixXd fd = ((a + h * e).exp() - (a - h * e).exp()) / (2 * h);
  EXPECT_LE((expm_frechet(a, e) - fd).norm(), 1e-7 * fd.norm());
}

TEST(Generator, AssembleExamples) {
  const MatrixXd rot = assemble(block({0.0}, {2.0}));
  EXPECT_LE((rot - (MatrixXd(2, 2) << 0, -2, 2, 0).finished()).norm(), 1e-30);

  BlockDiagGenerator unit;
  unit.raw_gamma = VectorXd::Constant(1, std::log(std::exp(1.0) - 1.0));
  unit.omega = VectorXd::Zero(1);
  EXPECT_LE((assemble(unit) + MatrixXd::Identity(2, 2)).norm(), 1e-15);

  DenseStableGenerator zero{MatrixXd::Zero(3, 3), MatrixXd::Zero(3, 3)};
  EXPECT_EQ(assemble(zero), MatrixXd::Zero(3, 3));
  EXPECT_THROW(init_block_generator(7, BlockInit::Dissipative), ConfigError);
}

TEST(Generator, DenseStructure) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gen = random_dense(rng, 6);
    const MatrixXd a = assemble(gen);
    const MatrixXd sym = 0.5 * (a + a.transpose());
    EXPECT_LE(Eigen::SelfAdjointEigenSolver<MatrixXd>(sym).eigenvalues().maxCoeff(), 1e-10);
    EXPECT_EQ(gen.skew_part() + gen.skew_part().transpose(), MatrixXd::Zero(6, 6));
    const VectorXd z = random_vector(rng, 6);
    EXPECT_NEAR(2 * z.dot(a * z), 2 * z.dot(gen.symmetric_part() * z), 1e-10 * (1 + z.squaredNorm() * a.norm()));
  }
}

TEST(Generator, InitialisationRanges) {
  const auto dis = init_block_generator(8, BlockInit::Dissipative);
  EXPECT_NEAR(dis.gamma()(0), 0.1, 1e-12);
  EXPECT_DOUBLE_EQ(dis.omega(0), 0.0);
  EXPECT_NEAR(dis.omega(3), pi, 1e-12);
  const auto con = init_block_generator(8, BlockInit::Conservative);
  EXPECT_NEAR(con.gamma()(2), 1e-3, 1e-12);
  EXPECT_NEAR(con.omega(3), 4 * pi, 1e-12);
}

TEST(Evolve, ClosedFormExamples) {
  const VectorXd g0 = (VectorXd(2) << 1.0, 0.0).finished();
  const VectorXd quarter = evolve(block({0.0}, {pi / 2}), g0, 1.0);
  EXPECT_NEAR(quarter(0), 0.0, 1e-12);
  EXPECT_NEAR(quarter(1), 1.0, 1e-12);

  const VectorXd g = (VectorXd(2) << 0.7, -1.3).finished();
  EXPECT_LE((evolve(block({std::log(2.0)}, {0.0}), g, 1.0) - g / 2).norm(), 1e-12);

  std::mt19937_64 rng(6);
  const Generator dense = random_dense(rng, 4);
  const VectorXd g4 = random_vector(rng, 4);
  EXPECT_EQ(evolve(dense, g4, 0.0), g4);
}

TEST(Evolve, RejectsBadInputs) {
  const Generator gen = block({0.1}, {1.0});
  const VectorXd g = VectorXd::Ones(2);
  EXPECT_THROW(evolve(gen, g, -0.1), PreconditionError);
  EXPECT_THROW(evolve(gen, VectorXd::Constant(2, std::nan("")), 1.0), PreconditionError);
  EXPECT_THROW(evolve(gen, VectorXd::Ones(3), 1.0), PreconditionError);
  EXPECT_THROW(evolve_recursive(gen, g, 0.0, 3), PreconditionError);
  EXPECT_THROW(evolve_recursive(gen, g, 0.1, 0), PreconditionError);
}

TEST(Evolve, ClosedFormMatchesDenseExponential) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto gen = random_block(rng, 3);
    const double tau = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    const MatrixXd ref = (tau * assemble(gen)).exp();
    EXPECT_LE((transition_matrix(gen, tau) - ref).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Evolve, SemigroupAndRecursion) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Generator gen = trial % 2 ? Generator(random_block(rng, 3)) : Generator(random_dense(rng, 6));
    const VectorXd g = random_vector(rng, 6);
    const double t1 = 0.37, t2 = 1.21;
    EXPECT_LE((evolve(gen, g, t1 + t2) - evolve(gen, evolve(gen, g, t1), t2)).norm(), 1e-10);
    const auto states = evolve_recursive(gen, g, 0.1, 25);
    ASSERT_EQ(states.size(), 25u);
    EXPECT_LE((states.back() - evolve(gen, g, 2.5)).norm(), 1e-10);
    EXPECT_LE((states.front() - evolve(gen, g, 0.1)).norm(), 1e-15);
  }
}

TEST(Evolve, RotationPreservesNorm) {
  std::mt19937_64 rng(9);
  BlockDiagGenerator gen;
  gen.raw_gamma = VectorXd::Constant(4, -800.0);  // softplus underflows to 0
  gen.omega = random_vector(rng, 4);
  ASSERT_EQ(gen.gamma().maxCoeff(), 0.0);
  const VectorXd g = random_vector(rng, 8);
  for (const auto& s : evolve_recursive(gen, g, 0.3, 40)) EXPECT_NEAR(s.norm(), g.norm(), 1e-10);
  for (double t : {0.5, 7.0, 120.0}) EXPECT_NEAR(evolve(gen, g, t).norm(), g.norm(), 1e-10);
}

TEST(Contraction, SpectralNormBounded) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const Generator b = random_block(rng, 4);
    const Generator d = random_dense(rng, 5);
    for (double t : {0.1, 1.0, 10.0}) {
      EXPECT_LE(spectral_norm_expm(b, t), 1.0 + 1e-9);
      EXPECT_LE(spectral_norm_expm(d, t), 1.0 + 1e-9);
    }
    EXPECT_NEAR(spectral_norm_expm(d, 0.0), 1.0, 1e-12);
  }
  EXPECT_NEAR(spectral_norm_expm(block({1.0}, {5.0}), 1.0), std::exp(-1.0), 1e-12);
}

TEST(Spectrum, BlockEigenvalues) {
  const auto ev = spectrum(block({1.0}, {2.0}));
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_NEAR(ev[0].real(), -1.0, 1e-12);
  EXPECT_NEAR(ev[1].real(), -1.0, 1e-12);
  EXPECT_NEAR(std::abs(ev[0].imag()), 2.0, 1e-12);
  EXPECT_NEAR(ev[0].imag() + ev[1].imag(), 0.0, 1e-12);

  std::mt19937_64 rng(11);
  for (const auto& l : spectrum(random_dense(rng, 7))) EXPECT_LE(l.real(), 1e-10);
  for (const auto& l : spectrum(DenseStableGenerator{MatrixXd::Zero(3, 3), MatrixXd::Zero(3, 3)})) {
    EXPECT_EQ(std::abs(l), 0.0);
  }
}

TEST(Forcing, Composition) {
  std::mt19937_64 rng(12);
  const Generator gen = random_block(rng, 2);
  const VectorXd g0 = random_vector(rng, 4);
  auto head = random_head(rng, 4, 6, 2.5);

  EXPECT_LE((forced_evolve(gen, head, g0, 0.3, 0.3) - (g0 + head(0.3))).norm(), 1e-15);
  const double t = 0.9;
  const VectorXd via_head = forced_evolve(gen, head, g0, 0.3, t) - evolve(gen, g0, t - 0.3);
  EXPECT_LE((via_head - head(t)).norm(), 1e-14);
  EXPECT_LE((head(t) - head(t + 1.0 / 2.5)).norm(), 1e-12);
  EXPECT_NEAR(forcing_features(2.5, 0.1)(0), std::sin(2 * pi * 0.25), 1e-15);

  head.w3.setZero();
  head.b3.setZero();
  EXPECT_LE((forced_evolve(gen, head, g0, 0.0, 1.4) - evolve(gen, g0, 1.4)).norm(), 1e-15);
  EXPECT_THROW(forced_evolve(gen, head, g0, 1.0, 0.5), PreconditionError);
}

TEST(Edmd, RecoversKnownGenerator) {
  std::mt19937_64 rng(13);
  const MatrixXd a = assemble(random_dense(rng, 4)) * 0.3;
  const double dt = 0.1;
  const MatrixXd step = (dt * a).exp();
  std::normal_distribution<double> n(0.0, 1.0);
  const MatrixXd before = MatrixXd::NullaryExpr(4, 50, [&] { return n(rng); });
  const MatrixXd after = step * before;
  EXPECT_LE((edmd_fit(before, after, dt, 0.0, EdmdMode::MatrixLog) - a).norm(), 1e-6);
  // The small-step formula is only first-order accurate.
  const MatrixXd small = edmd_fit(before, after, dt, 0.0, EdmdMode::SmallStep);
  EXPECT_LE((small - (step - MatrixXd::Identity(4, 4)) / dt).norm(), 1e-8);
  EXPECT_LE((small - a).norm(), dt * (a * a).norm());
}

TEST(Edmd, IdentityDynamicsAndErrors) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> n(0.0, 1.0);
  const MatrixXd g = MatrixXd::NullaryExpr(3, 20, [&] { return n(rng); });
  EXPECT_LE(edmd_fit(g, g, 0.1, 0.0).norm(), 1e-10);
  EXPECT_LE(edmd_fit(g, g, 0.1, 0.0, EdmdMode::SmallStep).norm(), 1e-10);

  std::vector<std::pair<LatentState, LatentState>> pairs;
  for (int k = 0; k < 20; ++k) pairs.emplace_back(g.col(k), g.col(k));
  EXPECT_LE(edmd_fit(pairs, 0.1, 0.0).norm(), 1e-10);

  MatrixXd flat = g;
  flat.row(2) = flat.row(1);
  EXPECT_THROW(edmd_fit(flat, flat, 0.1, 0.0), NumericalError);
  EXPECT_NO_THROW(edmd_fit(flat, flat, 0.1, 1e-3, EdmdMode::SmallStep));
  EXPECT_THROW(edmd_fit(g, g, 0.1, -1.0), PreconditionError);
  EXPECT_THROW(edmd_fit(g, g.leftCols(5), 0.1, 0.0), PreconditionError);
}

TEST(Edmd, ErrorShrinksLikeInverseRootM) {
  const std::vector<int> sizes = {64, 256, 1024};
  const auto res = convergence_study(4, sizes, 0.01, 21, 20);
  ASSERT_EQ(res.rows.size(), 3u);
  EXPECT_GT(res.rows[0].mean_error, res.rows[2].mean_error);
  EXPECT_GE(res.slope, -0.7);
  EXPECT_LE(res.slope, -0.3);
}
