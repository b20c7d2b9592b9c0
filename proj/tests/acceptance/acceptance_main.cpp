// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
// when any criterion fails.  The training criteria take several minutes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vitk/checkpoint.hpp"
#include "vitk/dataset.hpp"
#include "vitk/exact_solutions.hpp"
#include "vitk/experiments.hpp"
#include "vitk/expm.hpp"
#include "vitk/generator.hpp"
#include "vitk/interface_physics.hpp"
#include "vitk/metrics.hpp"
#include "vitk/rollout.hpp"
#include "vitk/trainer.hpp"

using namespace vitk;
using Eigen::MatrixXd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Shared by criteria 5-8.
TrainConfig training_budget(std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = 600;
  tc.peak_lr = 5e-4;
  tc.weight_decay = 2e-5;
  tc.warmup_epochs = 10;
  tc.seed = seed;
  tc.generator_lr_scale = 1000.0;
  tc.deterministic = true;
  return tc;
}

Checkpoint train_example(const TrajectoryDataset& ds, GeneratorMode mode, std::uint64_t seed) {
  ModelConfig mc;
  mc.grid_h = ds.domain.grid_h;
  mc.grid_w = ds.domain.grid_w;
  mc.generator_mode = mode;
  const auto start = std::chrono::steady_clock::now();
  Checkpoint ck = train(ds, mc, training_budget(seed), LossWeights::for_example(ds.domain.example_id), {});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("  trained %s (%zu parameters) in %.0f s, final loss %.3g\n", to_string(ds.domain.example_id).c_str(),
              ck.model.parameter_count(), secs, ck.history.back().total);
  std::fflush(stdout);
  return ck;
}

std::vector<MetricsRow> metrics_at(const Checkpoint& ck, const TrajectoryDataset& ds, double t) {
  const double times[] = {t};
  const auto pred = rollout(ck, ds, times, RolloutMode::Direct);
  return snapshot_metrics(pred[0], ds.snapshots[ds.index_of(t)], ds.domain, t);
}

const MetricsRow& row(const std::vector<MetricsRow>& rows, const std::string& channel) {
  return *std::find_if(rows.begin(), rows.end(), [&](const MetricsRow& r) { return r.channel == channel; });
}

Outcome contraction() {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd raw = Eigen::VectorXd::NullaryExpr(4, [&] { return 3.0 * n(rng); });
    const Eigen::VectorXd omega = Eigen::VectorXd::NullaryExpr(4, [&] { return 5.0 * n(rng); });
    const Generator block = BlockDiagGenerator{raw, omega};
    const Generator dense = DenseStableGenerator{MatrixXd::NullaryExpr(8, 8, [&] { return n(rng); }),
                                                 MatrixXd::NullaryExpr(8, 8, [&] { return 2.0 * n(rng); })};
    for (double t : {0.1, 1.0, 10.0}) {
      worst = std::max({worst, spectral_norm_expm(block, t), spectral_norm_expm(dense, t)});
    }
  }
  return {worst <= 1.0 + 1e-9, "max ||exp(tA)||_2 = " + fmt("%.15f", worst)};
}

Outcome exponential() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  double closed = 0.0, semigroup = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd raw = Eigen::VectorXd::NullaryExpr(1, [&] { return 2.0 * n(rng); });
    const Eigen::VectorXd omega = Eigen::VectorXd::NullaryExpr(1, [&] { return 4.0 * n(rng); });
    const Generator g = BlockDiagGenerator{raw, omega};
    const double s = u(rng), t = u(rng);
    closed = std::max(closed, (transition_matrix(g, t) - expm(t * assemble(g))).cwiseAbs().maxCoeff());
    semigroup = std::max(semigroup, (transition_matrix(g, s + t) - transition_matrix(g, s) * transition_matrix(g, t))
                                        .cwiseAbs()
                                        .maxCoeff());
  }
  return {closed <= 1e-12 && semigroup <= 1e-10,
          "closed-form gap " + fmt("%.2e", closed) + ", semigroup gap " + fmt("%.2e", semigroup)};
}

Outcome physics() {
  std::mt19937_64 rng(303);
  double residual = 0.0, factor = 0.0;
  for (ExampleId id : {ExampleId::SdEx1, ExampleId::NsdEx2}) {
    const DomainSpec d = make_domain(id, 8, 8);
    std::uniform_real_distribution<double> ux(d.x_range.lo, d.x_range.hi), uy(d.y_range.lo, d.y_range.hi), ut(0.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
      const double x[] = {ux(rng)};
      const auto r = interface_residuals_at(id, ut(rng), x);
      residual = std::max({residual, std::abs(r.flux), std::abs(r.normal_stress)});

      const double xs = ux(rng), ys = uy(rng), t = ut(rng);
      const double f = id == ExampleId::SdEx1 ? sd_temporal_factor(t) : nsd_temporal_factor(t);
      const auto a = eval_exact(d, xs, ys, t), b = eval_exact(d, xs, ys, 0.0);
      factor = std::max({factor, std::abs(a.u1 - f * b.u1), std::abs(a.u2 - f * b.u2), std::abs(a.p - f * b.p),
                         std::abs(a.phi - f * b.phi)});
    }
  }
  return {residual <= 1e-12 && factor <= 1e-14,
          "max interface residual " + fmt("%.2e", residual) + ", factorization gap " + fmt("%.2e", factor)};
}

Outcome edmd_scaling() {
  const int sizes[] = {64, 256, 1024, 4096};
  const auto r = convergence_study(8, sizes, 0.01, 404, 20);
  return {r.slope >= -0.7 && r.slope <= -0.3, "log-log slope " + fmt("%.3f", r.slope)};
}

Outcome example1() {
  const auto ds = normalize(generate_dataset(make_domain(ExampleId::SdEx1, 64, 64), 0.0, 2.0, 0.1, 1.0));
  const Checkpoint ck = train_example(ds, GeneratorMode::Dissipative, 1);
  const auto t1 = metrics_at(ck, ds, 1.0), t2 = metrics_at(ck, ds, 2.0);
  bool pass = true;
  std::ostringstream msg;
  for (const char* c : {"u1", "u2", "phi"}) {
    const double e = *row(t1, c).rel_l2;
    pass = pass && e <= 0.03;
    msg << c << "(1.0) " << fmt("%.2f%%", 100 * e) << ", ";
  }
  for (const char* c : {"u1", "u2"}) {
    const double e = *row(t2, c).rel_l2;
    pass = pass && e <= 0.25;
    msg << c << "(2.0) " << fmt("%.2f%%", 100 * e) << ", ";
  }
  const double p1 = row(t1, "p").mse, p2 = row(t2, "p").mse;
  pass = pass && p1 <= 5e-4 && p2 <= 5e-4;
  msg << "p mse " << fmt("%.2e", p1) << " / " << fmt("%.2e", p2);
  return {pass, msg.str()};
}

// Criteria 6-8 share one trained Example-2 model on a dataset reaching t = 5.
struct Example2 {
  TrajectoryDataset ds;
  Checkpoint ck;
};

const Example2& example2() {
  static const Example2 e = [] {
    Example2 out;
    out.ds = normalize(generate_dataset(make_domain(ExampleId::NsdEx2, 64, 64), 0.0, 5.0, 0.1, 1.0));
    out.ck = train_example(out.ds, GeneratorMode::Conservative, 1);
    return out;
  }();
  return e;
}

Outcome example2_accuracy() {
  const auto& e = example2();
  const auto t1 = metrics_at(e.ck, e.ds, 1.0), t2 = metrics_at(e.ck, e.ds, 2.0);
  bool pass = true;
  std::ostringstream msg;
  for (const char* c : {"u1", "u2"}) {
    const double a = *row(t1, c).rel_l2, b = *row(t2, c).rel_l2;
    pass = pass && a <= 0.03 && b <= 0.03 && b <= 2 * a;
    msg << c << " " << fmt("%.2f%%", 100 * a) << " -> " << fmt("%.2f%%", 100 * b) << "; ";
  }
  return {pass, msg.str()};
}

Outcome error_growth_linear() {
  const auto& e = example2();
  const auto g = error_growth(e.ck, e.ds, 1.0, 5.0, 1.0, RolloutMode::Direct);
  return {g.fit.r2_linear >= 0.9 && g.fit.exp_ratio < 4.0,
          "slope " + fmt("%.3e", g.fit.slope) + ", r2_linear " + fmt("%.3f", g.fit.r2_linear) + ", exp_ratio " +
              fmt("%.3f", g.fit.exp_ratio)};
}

Outcome noise_robustness() {
  const auto& e = example2();
  std::vector<double> times;
  for (int k = 11; k <= 20; ++k) times.push_back(0.1 * k);
  int improved = 0;
  for (const auto& c : noise_study(e.ck, e.ds, times, 0.1, 808)) improved += c.r2_model > c.r2_noisy ? 1 : 0;
  return {improved >= 9, std::to_string(improved) + "/10 reconstructions beat the noisy input"};
}

Outcome gradient_check() {
  const auto ds = normalize(generate_dataset(make_domain(ExampleId::SdEx1, 16, 16), 0.0, 1.0, 0.1, 1.0));
  ModelConfig mc;
  mc.grid_h = mc.grid_w = 16;
  mc.patch_size = 4;
  mc.embed_dim = 16;
  mc.depth = 2;
  mc.heads = 2;
  mc.latent_dim = 16;
  mc.harmonic_freqs = 2;
  mc.refine_hidden = 8;
  KoopmanModel m(mc, ds.domain.mask, 909);
  // Move away from the zero-initialised layers so every parameter matters.
  std::mt19937_64 rng(910);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (auto& p : m.parameters()) p.value += MatrixXd::NullaryExpr(p.value.rows(), p.value.cols(), [&] { return noise(rng); });
  const auto patches = training_inputs(m, ds);
  const LossWeights w = LossWeights::for_example(ExampleId::SdEx1);
  for (auto& p : m.parameters()) p.zero_grad();
  {
    ad::Tape tape;
    tape.backward(training_loss(tape, m, ds, patches, RolloutMode::Direct, w, {}).total);
  }
  auto loss = [&] {
    ad::Tape tape(false);
    return training_loss(tape, m, ds, patches, RolloutMode::Direct, w, {}).total.scalar();
  };
  const double base = loss(), h = 1e-4, eps = std::numeric_limits<double>::epsilon();
  std::uniform_int_distribution<std::size_t> pick(0, m.parameters().size() - 1);
  double worst = 0.0;
  int failures = 0, at_floor = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto& p = m.parameters()[pick(rng)];
    const auto k = std::uniform_int_distribution<Eigen::Index>(0, p.value.size() - 1)(rng);
    const double saved = p.value(k);
    p.value(k) = saved + h;
    const double up = loss();
    p.value(k) = saved - h;
    const double down = loss();
    p.value(k) = saved;
    const double fd = (up - down) / (2 * h), an = p.grad(k);
    const double scale = std::max(std::abs(fd), std::abs(an));
    const double floor = 10 * eps * std::abs(base) / h;
    if (scale > floor) {
      worst = std::max(worst, std::abs(an - fd) / scale);
    } else {
      ++at_floor;  // e.g. attention key biases, whose exact gradient is zero
    }
    if (std::abs(an - fd) > 1e-4 * scale + floor) ++failures;
  }
  return {failures == 0, "worst relative gap " + fmt("%.2e", worst) + " (" + std::to_string(at_floor) +
                             " of 20 at the round-off floor), failures " + std::to_string(failures)};
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream x(a, std::ios::binary), y(b, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(x)), {}), sb((std::istreambuf_iterator<char>(y)), {});
  return !sa.empty() && sa == sb;
}

Outcome round_trip() {
  const fs::path dir = fs::temp_directory_path() / "vitk_acceptance_io";
  fs::remove_all(dir);
  const auto ds = normalize(generate_dataset(make_domain(ExampleId::SdEx1, 16, 16), 0.0, 2.0, 0.1, 1.0));
  save_dataset(ds, dir / "data");
  const auto ds2 = load_dataset(dir / "data");
  bool data_ok = ds2.size() == ds.size();
  for (std::size_t k = 0; data_ok && k < ds.size(); ++k) {
    // The blob stores f32, so the loaded values are the f32 roundings.
    const MatrixXd f32 = ds.snapshots[k].values.cast<float>().cast<double>();
    data_ok = ds2.times[k] == ds.times[k] && ds2.snapshots[k].values == f32;
  }
  save_dataset(ds2, dir / "data2");
  data_ok = data_ok && same_bytes(dir / "data" / "data.f32", dir / "data2" / "data.f32");

  ModelConfig mc;
  mc.grid_h = mc.grid_w = 16;
  mc.patch_size = 4;
  mc.embed_dim = 8;
  mc.depth = 1;
  mc.heads = 2;
  mc.latent_dim = 8;
  mc.harmonic_freqs = 1;
  TrainConfig tc;
  tc.epochs = 3;
  tc.warmup_epochs = 1;
  const Checkpoint ck = train(ds, mc, tc, LossWeights::for_example(ExampleId::SdEx1), {});
  save_checkpoint(ck, dir / "ck");
  const Checkpoint ck2 = load_checkpoint(dir / "ck");
  bool ckpt_ok = ck2.model.parameters().size() == ck.model.parameters().size();
  for (std::size_t i = 0; ckpt_ok && i < ck.model.parameters().size(); ++i) {
    ckpt_ok = ck2.model.parameters()[i].value == ck.model.parameters()[i].value;
  }
  save_checkpoint(ck2, dir / "ck2");
  ckpt_ok = ckpt_ok && same_bytes(dir / "ck" / "ckpt.f32", dir / "ck2" / "ckpt.f32");

  const auto rows = metrics_at(ck, ds, 1.0);
  write_metrics_csv(dir / "metrics.csv", rows);
  std::ifstream in(dir / "metrics.csv");
  std::string header, p_line, line;
  std::getline(in, header);
  while (std::getline(in, line)) {
    if (line.find(",p,") != std::string::npos) p_line = line;
  }
  const auto back = read_metrics_csv(dir / "metrics.csv");
  const bool csv_ok = header == "time,channel,mse,mae,max_err,rel_l2,rmse" && p_line.find(",-,") != std::string::npos &&
                      back.size() == 4 && !row(back, "p").rel_l2.has_value() && row(back, "u1").rel_l2.has_value();
  fs::remove_all(dir);
  return {data_ok && ckpt_ok && csv_ok, std::string("dataset ") + (data_ok ? "ok" : "MISMATCH") + ", checkpoint " +
                                            (ckpt_ok ? "ok" : "MISMATCH") + ", metrics csv " + (csv_ok ? "ok" : "BAD")};
}

}  // namespace

// Optional arguments select criteria by number, e.g. `acceptance 1 9 10`.
int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"contraction of exp(tA) for stable generators", contraction},
      {"block closed form and semigroup identity", exponential},
      {"manufactured-solution interface physics", physics},
      {"least-squares generator error scaling", edmd_scaling},
      {"stokes-darcy interpolation and extrapolation accuracy", example1},
      {"periodic benchmark accuracy with conservative generator", example2_accuracy},
      {"linear long-horizon error growth", error_growth_linear},
      {"noise robustness of the reconstruction", noise_robustness},
      {"analytic gradients against finite differences", gradient_check},
      {"dataset, checkpoint and metrics round trip", round_trip},
  };
  std::vector<bool> selected(criteria.size(), argc == 1);
  for (int a = 1; a < argc; ++a) {
    const int k = std::atoi(argv[a]);
    if (k >= 1 && k <= static_cast<int>(criteria.size())) selected[static_cast<std::size_t>(k - 1)] = true;
  }
  int failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    ++ran;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("[%s] %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
