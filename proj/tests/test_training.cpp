#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <gtest/gtest.h>
#include <json.hpp>

#include "vitk/checkpoint.hpp"
#include "vitk/dataset.hpp"
#include "vitk/errors.hpp"
#include "vitk/loss.hpp"
#include "vitk/optimizer.hpp"
#include "vitk/run_config.hpp"
#include "vitk/trainer.hpp"

namespace fs = std::filesystem;
using namespace vitk;
using Eigen::MatrixXd;

namespace {

ModelConfig tiny_config(GeneratorMode mode = GeneratorMode::Dissipative) {
  ModelConfig c;
  c.grid_h = 8;
  c.grid_w = 8;
  c.patch_size = 4;
  c.embed_dim = 8;
  c.depth = 1;
  c.heads = 2;
  c.latent_dim = 8;
  c.harmonic_freqs = 1;
  c.refine_hidden = 4;
  c.forcing_hidden = 4;
  c.generator_mode = mode;
  return c;
}

TrajectoryDataset small_dataset(ExampleId id = ExampleId::SdEx1) {
  return normalize(generate_dataset(make_domain(id, 8, 8), 0.0, 1.0, 0.25, 0.5));
}

TrainConfig quick_train(int epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.warmup_epochs = std::min(2, epochs);
  c.peak_lr = 1e-3;
  c.deterministic = true;
  return c;
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("vitk_training_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(CompositeLoss, ConstantOffsetExample) {
  const auto ds = small_dataset();
  std::vector<FieldSnapshot> targets(ds.snapshots.begin(), ds.snapshots.begin() + 2);
  MatrixXd preds(128, 4);
  for (int k = 0; k < 2; ++k) preds.middleRows(k * 64, 64) = targets[static_cast<std::size_t>(k)].values.leftCols(4);
  preds.col(kU1).array() += 0.1;
  LossWeights w{3.0, 5.0, 0.05, 1.0, 1.0};
  ad::Tape tape;
  auto terms = composite_loss(tape, tape.constant(preds), targets, ds.domain, std::nullopt, w);
  EXPECT_NEAR(terms.total.scalar(), 0.03, 1e-14);
  EXPECT_NEAR(terms.components().at("loss_u1"), 0.01, 1e-15);
  EXPECT_EQ(terms.components().at("loss_phi"), 0.0);

  for (int k = 0; k < 2; ++k) preds.middleRows(k * 64, 64) = targets[static_cast<std::size_t>(k)].values.leftCols(4);
  const MatrixXd zero_res = MatrixXd::Zero(8, 3);
  auto perfect = composite_loss(tape, tape.constant(preds), targets, ds.domain, tape.constant(zero_res), w);
  EXPECT_EQ(perfect.total.scalar(), 0.0);
  EXPECT_EQ(perfect.components().at("loss_lin"), 0.0);
}

TEST(CompositeLoss, LinearityTermIsMeanSquaredNorm) {
  const auto ds = small_dataset();
  std::vector<FieldSnapshot> targets(ds.snapshots.begin(), ds.snapshots.begin() + 1);
  const MatrixXd preds = targets[0].values.leftCols(4);
  MatrixXd res(2, 4);
  res << 1, 0, 0, 2, 0, 1, 0, 0;  // squared norms 1, 1, 0, 4
  LossWeights w;
  w.lambda_lin = 0.5;
  ad::Tape tape;
  auto terms = composite_loss(tape, tape.constant(preds), targets, ds.domain, tape.constant(res), w);
  EXPECT_DOUBLE_EQ(terms.components().at("loss_lin"), 1.5);
  EXPECT_DOUBLE_EQ(terms.total.scalar(), 0.75);
}

TEST(CompositeLoss, MaskRestriction) {
  const auto ds = small_dataset();
  std::vector<FieldSnapshot> targets(ds.snapshots.begin(), ds.snapshots.begin() + 1);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  const MatrixXd preds = MatrixXd::NullaryExpr(64, 4, [&] { return n(rng); });
  LossWeights w;
  ad::Tape tape;
  const auto before = composite_loss(tape, tape.constant(preds), targets, ds.domain, std::nullopt, w).components();
  auto mutated = targets;
  for (int px = 0; px < 64; ++px) {
    if (ds.domain.mask[static_cast<std::size_t>(px)] == 0) {
      for (int c : {kU1, kU2, kP}) mutated[0].values(px, c) = 1e3;
    } else {
      mutated[0].values(px, kPhi) = -1e3;
    }
  }
  const auto after = composite_loss(tape, tape.constant(preds), mutated, ds.domain, std::nullopt, w).components();
  for (const char* key : {"loss_u1", "loss_u2", "loss_p", "loss_phi", "total"}) EXPECT_EQ(before.at(key), after.at(key));
  EXPECT_GT(before.at("total"), 0.0);
  EXPECT_THROW(composite_loss(tape, tape.constant(MatrixXd::Zero(10, 4)), targets, ds.domain, std::nullopt, w),
               PreconditionError);
  w.w_p = -1.0;
  EXPECT_THROW(composite_loss(tape, tape.constant(preds), targets, ds.domain, std::nullopt, w), ConfigError);
}

TEST(CompositeLoss, OptionalVariants) {
  const auto ds = small_dataset();
  std::vector<FieldSnapshot> targets(ds.snapshots.begin(), ds.snapshots.begin() + 1);
  MatrixXd preds = targets[0].values.leftCols(4);
  preds.col(kP).array() += 3.0;
  LossWeights w{0.0, 0.0, 1.0, 0.0, 0.0};
  LossOptions huber;
  huber.huber_pressure = true;
  ad::Tape tape;
  EXPECT_NEAR(composite_loss(tape, tape.constant(preds), targets, ds.domain, std::nullopt, w, huber).total.scalar(),
              2.5, 1e-14);
  // A constant offset has no spatial gradient.
  LossOptions h1;
  h1.h1_weight = 10.0;
  const auto terms = composite_loss(tape, tape.constant(preds), targets, ds.domain, std::nullopt, w, h1);
  EXPECT_NEAR(terms.components().at("loss_h1"), 0.0, 1e-20);
  EXPECT_NEAR(terms.total.scalar(), 9.0, 1e-13);
}

TEST(Schedule, WarmupThenCosine) {
  TrainConfig c;
  c.epochs = 1200;
  EXPECT_EQ(lr_schedule(0, c), 0.0);
  EXPECT_NEAR(lr_schedule(1, c), 5e-5, 1e-18);
  EXPECT_DOUBLE_EQ(lr_schedule(10, c), 5e-4);
  EXPECT_NEAR(lr_schedule(1199, c), 5e-6, 1e-9);
  for (int e = 11; e < 1200; ++e) EXPECT_LE(lr_schedule(e, c), lr_schedule(e - 1, c));
  EXPECT_THROW(lr_schedule(1200, c), PreconditionError);
  EXPECT_THROW(lr_schedule(-1, c), PreconditionError);
  c.warmup_epochs = 1300;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(AdamW, FirstStepAndDecoupledDecay) {
  std::vector<ad::Parameter> params = {{"w", MatrixXd::Constant(1, 2, 2.0), {}, true, 1.0},
                                       {"b", MatrixXd::Constant(1, 1, 2.0), {}, false, 10.0}};
  params[0].grad = (MatrixXd(1, 2) << 0.5, -4.0).finished();
  params[1].grad = MatrixXd::Constant(1, 1, 1e-3);
  AdamW opt(0.1, 0.9, 0.999, 0.0);
  opt.step(params, 0.01);
  // The bias-corrected first step has unit magnitude per entry.
  EXPECT_NEAR(params[0].value(0, 0), 2.0 * (1 - 0.001) - 0.01, 1e-15);
  EXPECT_NEAR(params[0].value(0, 1), 2.0 * (1 - 0.001) + 0.01, 1e-15);
  EXPECT_NEAR(params[1].value(0, 0), 2.0 - 0.1, 1e-15);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(AdamW, MinimisesQuadratic) {
  std::vector<ad::Parameter> params = {{"x", MatrixXd::Constant(3, 1, 5.0), {}, false, 1.0}};
  AdamW opt(0.0);
  for (int i = 0; i < 2000; ++i) {
    params[0].grad = 2.0 * (params[0].value.array() - 1.0).matrix();
    opt.step(params, 0.05 * (1.0 - i / 2000.0));
  }
  EXPECT_LE((params[0].value.array() - 1.0).abs().maxCoeff(), 1e-2);
}

TEST(Train, ZeroEpochsReturnsInitialisation) {
  const auto ds = small_dataset();
  const auto ckpt = train(ds, tiny_config(), quick_train(0), LossWeights{});
  KoopmanModel fresh(tiny_config(), ds.domain.mask, 0);
  round_to_storage_precision(fresh);
  for (const auto& p : fresh.parameters()) EXPECT_EQ(ckpt.model.parameter(p.name).value, p.value) << p.name;
  EXPECT_TRUE(ckpt.history.empty());
  EXPECT_EQ(ckpt.example_id, ExampleId::SdEx1);
  EXPECT_DOUBLE_EQ(ckpt.train_horizon, 0.5);
}

TEST(Train, Preconditions) {
  auto raw = generate_dataset(make_domain(ExampleId::SdEx1, 8, 8), 0.0, 1.0, 0.25, 0.5);
  EXPECT_THROW(train(raw, tiny_config(), quick_train(1), LossWeights{}), PreconditionError);
  auto cfg = tiny_config();
  cfg.grid_h = cfg.grid_w = 16;
  EXPECT_THROW(train(small_dataset(), cfg, quick_train(1), LossWeights{}), ConfigError);
}

TEST(Train, NonFiniteLossAbortsWithComponents) {
  const auto ds = small_dataset();
  auto ckpt = train(ds, tiny_config(), quick_train(0), LossWeights{});
  ckpt.model.parameter("decoder.weight").value(0, 0) = std::nan("");
  try {
    train_from(ckpt, ds, quick_train(3), LossWeights{});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("loss_u1"), std::string::npos);
  }
}

TEST(Train, SeededRunsAgree) {
  const auto ds = small_dataset();
  const auto a = train(ds, tiny_config(), quick_train(15), LossWeights{});
  const auto b = train(ds, tiny_config(), quick_train(15), LossWeights{});
  ASSERT_EQ(a.history.size(), 15u);
  EXPECT_NEAR(a.history.back().total, b.history.back().total, 1e-6);
  EXPECT_LT(a.history.back().total, a.history.front().total);
  EXPECT_EQ(epoch_log_header(), "epoch,lr,total,loss_u1,loss_u2,loss_p,loss_phi,loss_lin");
  EXPECT_EQ(epoch_log_row(a.history[0]).substr(0, 4), "0,0,");
}

TEST(Train, RecursiveRolloutMatchesDirectAtStart) {
  const auto ds = small_dataset();
  KoopmanModel m(tiny_config(), ds.domain.mask, 0);
  const auto patches = training_inputs(m, ds);
  ad::Tape t1(false), t2(false);
  const auto direct = training_loss(t1, m, ds, patches, RolloutMode::Direct, LossWeights{}, {}).components();
  const auto recursive = training_loss(t2, m, ds, patches, RolloutMode::Recursive, LossWeights{}, {}).components();
  EXPECT_NEAR(direct.at("total"), recursive.at("total"), 1e-12);
}

// Finite differences of the full training loss for a handful of entries.
TEST(Train, LossGradientMatchesFiniteDifferences) {
  const auto ds = small_dataset();
  for (auto mode : {GeneratorMode::Dissipative, GeneratorMode::Dense, GeneratorMode::Forced}) {
    KoopmanModel m(tiny_config(mode), ds.domain.mask, 4);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (auto& p : m.parameters()) p.value += MatrixXd::NullaryExpr(p.value.rows(), p.value.cols(), [&] { return noise(rng); });
    const auto patches = training_inputs(m, ds);
    LossWeights w{3.0, 5.0, 0.5, 1.0, 1.0};
    for (auto& p : m.parameters()) p.zero_grad();
    {
      ad::Tape tape;
      tape.backward(training_loss(tape, m, ds, patches, RolloutMode::Direct, w, {}).total);
    }
    auto loss = [&] {
      ad::Tape tape(false);
      return training_loss(tape, m, ds, patches, RolloutMode::Direct, w, {}).total.scalar();
    };
    std::uniform_int_distribution<std::size_t> pick_param(0, m.parameters().size() - 1);
    for (int trial = 0; trial < 15; ++trial) {
      auto& p = m.parameters()[pick_param(rng)];
      const auto k = std::uniform_int_distribution<Eigen::Index>(0, p.value.size() - 1)(rng);
      const double saved = p.value(k), h = 1e-5;
      p.value(k) = saved + h;
      const double up = loss();
      p.value(k) = saved - h;
      const double down = loss();
      p.value(k) = saved;
      const double fd = (up - down) / (2 * h);
      const double floor = 1e-9 * std::abs(loss()) / h;
      EXPECT_LE(std::abs(p.grad(k) - fd), 1e-5 * std::max(std::abs(fd), std::abs(p.grad(k))) + floor)
          << to_string(mode) << " " << p.name << "[" << k << "]";
    }
  }
}

// Generator-only least squares on fixed latent pairs with a small step.
TEST(Train, GeneratorOnlyDescentIsMonotone) {
  const auto ds = small_dataset();
  KoopmanModel m(tiny_config(), ds.domain.mask, 6);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  const MatrixXd before = MatrixXd::NullaryExpr(8, 30, [&] { return n(rng); });
  Eigen::VectorXd rates(4), freqs(4);
  rates << 0.5, 1.0, 0.2, 0.8;
  freqs << 1.0, 0.5, 2.0, 0.0;
  const Generator truth = BlockDiagGenerator::from_rates(rates, freqs);
  const double dt = 0.05;
  const MatrixXd after = transition_matrix(truth, dt) * before;
  const std::vector<double> tb(30, 0.0), ta(30, dt);
  auto& raw = m.parameter("koopman.raw_gamma");
  auto& omega = m.parameter("koopman.omega");
  double previous = INFINITY, first = 0.0;
  for (int step = 0; step < 100; ++step) {
    raw.zero_grad();
    omega.zero_grad();
    ad::Tape tape;
    ad::Var r = m.linear_residual(tape, tape.constant(before), tape.constant(after), tb, ta);
    ad::Var lin = ad::scale(ad::sum_squares(r), 1.0 / 30.0);
    tape.backward(lin);
    EXPECT_LE(lin.scalar(), previous + 1e-15) << "step " << step;
    previous = lin.scalar();
    if (step == 0) first = previous;
    raw.value -= 0.5 * raw.grad;
    omega.value -= 0.5 * omega.grad;
  }
  EXPECT_LT(previous, 0.5 * first);
}

// Fields that are a fixed linear image of a 4-d latent with known stable dynamics.
TEST(Train, LearnsLinearLatentDynamics) {
  auto domain = make_domain(ExampleId::SdEx1, 8, 8);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd a(4, 4);
  a << -0.3, -1.0, 0, 0, 1.0, -0.3, 0, 0, 0, 0, -0.6, 0.4, 0, 0, -0.4, -0.6;
  const MatrixXd lift = MatrixXd::NullaryExpr(64 * 4, 4, [&] { return n(rng); });
  const Eigen::VectorXd z0 = (Eigen::VectorXd(4) << 1.0, 0.5, -0.8, 0.3).finished();
  TrajectoryDataset ds;
  ds.domain = domain;
  ds.dt = 0.1;
  ds.train_horizon = 1.0;
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.1 * k;
    const Eigen::VectorXd flat = lift * ((t * a).exp() * z0);
    FieldSnapshot s;
    s.values.resize(64, 5);
    for (int px = 0; px < 64; ++px) {
      const bool free = domain.mask[static_cast<std::size_t>(px)] == 1;
      for (int c = 0; c < 4; ++c) s.values(px, c) = lives_in_free_flow(c) == free ? flat(px * 4 + c) : 0.0;
      s.values(px, kMask) = free ? 1.0 : 0.0;
    }
    ds.times.push_back(t);
    ds.snapshots.push_back(s);
  }
  ds = normalize(ds);
  auto cfg = quick_train(500);
  cfg.deterministic = false;
  cfg.generator_lr_scale = 10.0;
  const auto ckpt = train(ds, tiny_config(), cfg, LossWeights{1, 1, 1, 1, 1});
  EXPECT_LT(ckpt.history.back().loss_lin, 1e-3);
  EXPECT_LT(ckpt.history.back().total, ckpt.history.front().total);
}

TEST(CheckpointIo, RoundTripIsBitwise) {
  const auto ds = small_dataset();
  auto ckpt = train(ds, tiny_config(GeneratorMode::Dense), quick_train(3), LossWeights::for_example(ExampleId::NsdEx2));
  const auto dir = scratch_dir("roundtrip");
  save_checkpoint(ckpt, dir);
  const auto loaded = load_checkpoint(dir);
  EXPECT_EQ(loaded.model.config().generator_mode, GeneratorMode::Dense);
  ASSERT_EQ(loaded.model.parameters().size(), ckpt.model.parameters().size());
  for (const auto& p : ckpt.model.parameters()) EXPECT_EQ(loaded.model.parameter(p.name).value, p.value) << p.name;
  EXPECT_EQ(loaded.history.size(), 3u);
  EXPECT_DOUBLE_EQ(loaded.history[2].loss_lin, ckpt.history[2].loss_lin);
  EXPECT_DOUBLE_EQ(loaded.weights.w_u2, 3.0);
  EXPECT_EQ(loaded.model.mask(), ckpt.model.mask());
  const auto dir2 = scratch_dir("roundtrip2");
  save_checkpoint(loaded, dir2);
  EXPECT_EQ(slurp(dir / "ckpt.f32"), slurp(dir2 / "ckpt.f32"));
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST(CheckpointIo, CorruptionIsDetected) {
  const auto ds = small_dataset();
  const auto ckpt = train(ds, tiny_config(GeneratorMode::Forced), quick_train(0), LossWeights{});
  const auto dir = scratch_dir("corrupt");
  save_checkpoint(ckpt, dir);
  EXPECT_EQ(load_checkpoint(dir).model.config().generator_mode, GeneratorMode::Forced);

  const auto blob = slurp(dir / "ckpt.f32");
  fs::resize_file(dir / "ckpt.f32", blob.size() - 8);
  EXPECT_THROW(load_checkpoint(dir), CorruptionError);
  std::ofstream(dir / "ckpt.f32", std::ios::binary) << blob;

  auto index = nlohmann::json::parse(slurp(dir / "ckpt.json"));
  index["version"] = kCheckpointVersion + 1;
  std::ofstream(dir / "ckpt.json") << index.dump();
  EXPECT_THROW(load_checkpoint(dir), CorruptionError);

  std::ofstream(dir / "ckpt.json") << "{ not json";
  EXPECT_THROW(load_checkpoint(dir), CorruptionError);
  fs::remove_all(dir);
}

TEST(RunConfigIo, RoundTripAndUnknownKeys) {
  RunConfig rc;
  rc.model = tiny_config(GeneratorMode::Conservative);
  rc.train.epochs = 77;
  rc.train.generator_lr_scale = 20.0;
  rc.weights = LossWeights::for_example(ExampleId::NsdEx2);
  rc.loss.linearity_span = 2;
  rc.dataset = "data/x";
  const auto path = scratch_dir("config") / "config.json";
  fs::create_directories(path.parent_path());
  save_run_config(rc, path);
  const auto back = load_run_config(path);
  EXPECT_EQ(back.model.generator_mode, GeneratorMode::Conservative);
  EXPECT_EQ(back.model.embed_dim, 8);
  EXPECT_EQ(back.train.epochs, 77);
  EXPECT_DOUBLE_EQ(back.train.generator_lr_scale, 20.0);
  EXPECT_DOUBLE_EQ(back.weights.w_p, 1.0);
  EXPECT_EQ(back.loss.linearity_span, 2);
  EXPECT_EQ(back.dataset, "data/x");

  auto j = to_json(rc);
  j["mystery"] = 1;
  EXPECT_THROW(run_config_from_json(j), ConfigError);
  fs::remove_all(path.parent_path());
}
