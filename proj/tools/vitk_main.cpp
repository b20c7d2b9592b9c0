// vitk: dataset generation, training and evaluation front end.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "vitk/checkpoint.hpp"
#include "vitk/dataset.hpp"
#include "vitk/errors.hpp"
#include "vitk/experiments.hpp"
#include "vitk/metrics.hpp"
#include "vitk/rollout.hpp"
#include "vitk/run_config.hpp"
#include "vitk/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vitk;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void apply_thread_env() {
  const char* env = std::getenv("VITK_NUM_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw UsageError(std::string("VITK_NUM_THREADS must be a positive integer, got '") + env + "'");
  Eigen::setNbThreads(static_cast<int>(n));
}

// Refuses to write into a non-empty directory unless forced.
void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError("output path exists and is not a directory: " + dir.string());
    if (!fs::is_empty(dir) && !force) {
      throw UsageError("output directory is not empty: " + dir.string() + " (use --force to overwrite)");
    }
  }
  fs::create_directories(dir);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

TrajectoryDataset open_dataset(const std::string& path) {
  if (!fs::is_directory(path)) throw UsageError("dataset directory not found: " + path);
  return load_dataset(path);
}

Checkpoint open_checkpoint(const std::string& path) {
  if (!fs::is_directory(path)) throw UsageError("checkpoint directory not found: " + path);
  return load_checkpoint(path);
}

// Times on the command line must exist in the dataset.
std::vector<double> resolve_times(const TrajectoryDataset& ds, const std::vector<double>& requested) {
  if (requested.empty()) return ds.times;
  for (double t : requested) {
    if (t < ds.times.front() - 1e-9 || t > ds.times.back() + 1e-9) {
      throw UsageError("time " + std::to_string(t) + " is outside the dataset range [" +
                       std::to_string(ds.times.front()) + ", " + std::to_string(ds.times.back()) + "]");
    }
    ds.index_of(t);
  }
  return requested;
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::string example;
  int grid = 64;
  int grid_h = 0, grid_w = 0;
  double dt = 0.1, t0 = 0.0, t_end = 2.0, horizon = 1.0;
  double forcing_frequency = kDefaultForcingFrequency, ramp = kDefaultRampTime;
  bool no_normalize = false, force = false;
  std::string out;
};

void add_gen(CLI::App& app, GenArgs& a) {
  auto* cmd = app.add_subcommand("gen", "Sample a manufactured-solution trajectory");
  cmd->add_option("--example", a.example, "sd, nsd or forced")->required();
  cmd->add_option("--grid", a.grid, "Square grid size")->check(CLI::PositiveNumber);
  cmd->add_option("--grid-h", a.grid_h, "Grid rows (overrides --grid)")->check(CLI::PositiveNumber);
  cmd->add_option("--grid-w", a.grid_w, "Grid columns (overrides --grid)")->check(CLI::PositiveNumber);
  cmd->add_option("--dt", a.dt, "Snapshot spacing")->check(CLI::PositiveNumber);
  cmd->add_option("--t0", a.t0, "First snapshot time");
  cmd->add_option("--t-end", a.t_end, "Last snapshot time");
  cmd->add_option("--train-horizon", a.horizon, "End of the training window");
  cmd->add_option("--forcing-frequency", a.forcing_frequency, "Driver frequency of the forced field");
  cmd->add_option("--ramp", a.ramp, "Ramp-up time of the forced field");
  cmd->add_flag("--no-normalize", a.no_normalize, "Store raw values");
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_flag("--force", a.force, "Overwrite a non-empty output directory");
}

int run_gen(const GenArgs& a) {
  const ExampleId id = parse_example_id(a.example);
  auto domain = make_domain(id, a.grid_h ? a.grid_h : a.grid, a.grid_w ? a.grid_w : a.grid);
  domain.forcing_frequency = a.forcing_frequency;
  domain.ramp_time = a.ramp;
  auto ds = generate_dataset(domain, a.t0, a.t_end, a.dt, a.horizon);
  for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
  if (!a.no_normalize) ds = normalize(ds);
  prepare_out_dir(a.out, a.force);
  save_dataset(ds, a.out);
  write_json(fs::path(a.out) / "config.json",
             {{"command", "gen"}, {"example", to_string(id)}, {"grid_h", domain.grid_h}, {"grid_w", domain.grid_w},
              {"dt", a.dt}, {"t0", a.t0}, {"t_end", a.t_end}, {"train_horizon", a.horizon},
              {"forcing_frequency", a.forcing_frequency}, {"ramp_time", a.ramp}, {"normalized", !a.no_normalize}});
  std::cout << "wrote " << ds.size() << " snapshots (" << ds.train_count() << " in the training window) to "
            << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data, out, config;
  bool force = false;
  int log_every = 50;
  RunConfig rc;
  std::string mode, rollout;
  CLI::App* cmd = nullptr;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* cmd = app.add_subcommand("train", "Train an encoder / generator / decoder model");
  a.cmd = cmd;
  auto& m = a.rc.model;
  auto& t = a.rc.train;
  auto& w = a.rc.weights;
  auto& l = a.rc.loss;
  cmd->add_option("--data", a.data, "Dataset directory")->required();
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_option("--config", a.config, "JSON run config; explicit flags take precedence");
  cmd->add_flag("--force", a.force, "Overwrite a non-empty output directory");
  cmd->add_option("--log-every", a.log_every, "Print progress every N epochs (0 = quiet)");

  cmd->add_option("--patch", m.patch_size);
  cmd->add_option("--embed-dim", m.embed_dim);
  cmd->add_option("--depth", m.depth);
  cmd->add_option("--heads", m.heads);
  cmd->add_option("--latent-dim", m.latent_dim);
  cmd->add_option("--harmonics", m.harmonic_freqs);
  cmd->add_option("--refine-hidden", m.refine_hidden);
  cmd->add_option("--forcing-hidden", m.forcing_hidden);
  cmd->add_option("--generator", a.mode, "dissipative, conservative, dense or forced");
  cmd->add_option("--forcing-frequency", m.forcing_frequency);

  cmd->add_option("--epochs", t.epochs);
  cmd->add_option("--lr", t.peak_lr, "Peak learning rate");
  cmd->add_option("--weight-decay", t.weight_decay);
  cmd->add_option("--warmup", t.warmup_epochs);
  cmd->add_option("--seed", t.seed);
  cmd->add_option("--rollout", a.rollout, "direct or recursive");
  cmd->add_option("--generator-lr-scale", t.generator_lr_scale);
  cmd->add_flag("--deterministic", t.deterministic, "Single-threaded, reproducible reductions");

  cmd->add_option("--w-u1", w.w_u1);
  cmd->add_option("--w-u2", w.w_u2);
  cmd->add_option("--w-p", w.w_p);
  cmd->add_option("--w-phi", w.w_phi);
  cmd->add_option("--lambda-lin", w.lambda_lin);
  cmd->add_flag("--huber-pressure", l.huber_pressure);
  cmd->add_option("--huber-delta", l.huber_delta);
  cmd->add_option("--h1-weight", l.h1_weight);
  cmd->add_option("--linearity-span", l.linearity_span);
}

// Layers config file < per-example defaults < explicit flags.
RunConfig resolve_train_config(const TrainArgs& a, const TrajectoryDataset& ds) {
  RunConfig rc;
  bool weights_from_file = false;
  if (!a.config.empty()) {
    rc = load_run_config(a.config);
    std::ifstream in(a.config);
    const json j = json::parse(in);
    weights_from_file = j.contains("w_u1") || j.contains("w_u2") || j.contains("w_p") || j.contains("w_phi");
  } else if (ds.domain.example_id != ExampleId::SdEx1) {
    rc.model.generator_mode = GeneratorMode::Conservative;
  }
  if (!weights_from_file) {
    const double lambda = rc.weights.lambda_lin;
    rc.weights = LossWeights::for_example(ds.domain.example_id);
    rc.weights.lambda_lin = lambda;
  }
  auto given = [&](const char* name) { return a.cmd->get_option(name)->count() > 0; };
  const auto& f = a.rc;
  if (given("--patch")) rc.model.patch_size = f.model.patch_size;
  if (given("--embed-dim")) rc.model.embed_dim = f.model.embed_dim;
  if (given("--depth")) rc.model.depth = f.model.depth;
  if (given("--heads")) rc.model.heads = f.model.heads;
  if (given("--latent-dim")) rc.model.latent_dim = f.model.latent_dim;
  if (given("--harmonics")) rc.model.harmonic_freqs = f.model.harmonic_freqs;
  if (given("--refine-hidden")) rc.model.refine_hidden = f.model.refine_hidden;
  if (given("--forcing-hidden")) rc.model.forcing_hidden = f.model.forcing_hidden;
  if (given("--generator")) rc.model.generator_mode = parse_generator_mode(a.mode);
  if (given("--forcing-frequency")) rc.model.forcing_frequency = f.model.forcing_frequency;
  if (given("--epochs")) rc.train.epochs = f.train.epochs;
  if (given("--lr")) rc.train.peak_lr = f.train.peak_lr;
  if (given("--weight-decay")) rc.train.weight_decay = f.train.weight_decay;
  if (given("--warmup")) rc.train.warmup_epochs = f.train.warmup_epochs;
  if (given("--seed")) rc.train.seed = f.train.seed;
  if (given("--rollout")) rc.train.rollout_mode = parse_rollout_mode(a.rollout);
  if (given("--generator-lr-scale")) rc.train.generator_lr_scale = f.train.generator_lr_scale;
  if (given("--deterministic")) rc.train.deterministic = true;
  if (given("--w-u1")) rc.weights.w_u1 = f.weights.w_u1;
  if (given("--w-u2")) rc.weights.w_u2 = f.weights.w_u2;
  if (given("--w-p")) rc.weights.w_p = f.weights.w_p;
  if (given("--w-phi")) rc.weights.w_phi = f.weights.w_phi;
  if (given("--lambda-lin")) rc.weights.lambda_lin = f.weights.lambda_lin;
  if (given("--huber-pressure")) rc.loss.huber_pressure = true;
  if (given("--huber-delta")) rc.loss.huber_delta = f.loss.huber_delta;
  if (given("--h1-weight")) rc.loss.h1_weight = f.loss.h1_weight;
  if (given("--linearity-span")) rc.loss.linearity_span = f.loss.linearity_span;

  rc.model.grid_h = ds.domain.grid_h;
  rc.model.grid_w = ds.domain.grid_w;
  if (ds.domain.example_id == ExampleId::ForcedSyn && !given("--forcing-frequency")) {
    rc.model.forcing_frequency = ds.domain.forcing_frequency;
  }
  rc.dataset = fs::absolute(a.data).string();
  rc.out_dir = fs::absolute(a.out).string();
  rc.model.validate();
  rc.train.validate();
  rc.weights.validate();
  return rc;
}

int run_train(const TrainArgs& a) {
  const auto ds = open_dataset(a.data);
  const RunConfig rc = resolve_train_config(a, ds);
  prepare_out_dir(a.out, a.force);
  save_run_config(rc, fs::path(a.out) / "config.json");

  std::ofstream log(fs::path(a.out) / "train_log.csv");
  log << epoch_log_header() << "\n";
  const int total = rc.train.epochs;
  auto on_epoch = [&](const EpochLog& e) {
    log << epoch_log_row(e) << "\n";
    if (a.log_every > 0 && (e.epoch % a.log_every == 0 || e.epoch == total - 1)) {
      std::printf("epoch %5d  lr %.3e  total %.6e  lin %.3e\n", e.epoch, e.lr, e.total, e.loss_lin);
      std::fflush(stdout);
    }
  };
  std::cout << "training " << to_string(rc.model.generator_mode) << " model on " << ds.train_count()
            << " snapshots for " << total << " epochs\n";
  const Checkpoint ckpt = train(ds, rc.model, rc.train, rc.weights, rc.loss, on_epoch);
  log.close();
  save_checkpoint(ckpt, a.out);
  std::cout << "parameters: " << ckpt.model.parameter_count() << " (encoder " << ckpt.model.encoder_parameter_count()
            << ")\n";
  if (!ckpt.history.empty()) std::printf("final loss %.6e\n", ckpt.history.back().total);
  std::cout << "checkpoint written to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// predict / eval / noise

struct EvalArgs {
  std::string ckpt, data, out, mode = "direct";
  std::vector<double> times;
  bool force = false, denormalize = false;
  bool growth = false;
  double growth_from = 1.0, growth_to = 5.0, period = 1.0;
  std::optional<double> noise;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, EvalArgs& a) {
  cmd->add_option("--ckpt", a.ckpt, "Checkpoint directory")->required();
  cmd->add_option("--data", a.data, "Dataset directory")->required();
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_option("--times", a.times, "Target times (default: every dataset time)");
  cmd->add_option("--mode", a.mode, "direct or recursive");
  cmd->add_flag("--force", a.force, "Overwrite a non-empty output directory");
}

json eval_args_json(const char* command, const EvalArgs& a) {
  json j = {{"command", command}, {"ckpt", fs::absolute(a.ckpt).string()}, {"data", fs::absolute(a.data).string()},
            {"times", a.times}, {"mode", a.mode}, {"seed", a.seed}};
  if (a.noise) j["noise"] = *a.noise;
  if (a.growth) j["error_growth"] = {{"from", a.growth_from}, {"to", a.growth_to}, {"period", a.period}};
  return j;
}

int run_predict(const EvalArgs& a) {
  const auto ckpt = open_checkpoint(a.ckpt);
  const auto ds = open_dataset(a.data);
  const auto times = resolve_times(ds, a.times);
  auto preds = rollout(ckpt, ds, times, parse_rollout_mode(a.mode));
  TrajectoryDataset out = ds;
  out.times = times;
  out.snapshots = std::move(preds);
  out.warnings.clear();
  if (a.denormalize) {
    for (auto& s : out.snapshots) s = denormalize(s, ds.norm_stats);
    out.norm_stats = NormStats{};
    out.normalized = false;
  }
  prepare_out_dir(a.out, a.force);
  save_dataset(out, a.out);
  auto cfg = eval_args_json("predict", a);
  cfg["denormalize"] = a.denormalize;
  write_json(fs::path(a.out) / "config.json", cfg);
  std::cout << "wrote " << times.size() << " predicted snapshots to " << a.out << "\n";
  return 0;
}

void write_noise_csv(const fs::path& path, const std::vector<NoiseCase>& cases) {
  std::ofstream out(path);
  out << "time,r2_noisy,r2_model\n";
  out.precision(10);
  for (const auto& c : cases) out << c.time << "," << c.r2_noisy << "," << c.r2_model << "\n";
}

int run_eval(const EvalArgs& a) {
  const auto ckpt = open_checkpoint(a.ckpt);
  const auto ds = open_dataset(a.data);
  const auto times = resolve_times(ds, a.times);
  const auto mode = parse_rollout_mode(a.mode);
  const auto preds = rollout(ckpt, ds, times, mode);
  std::vector<MetricsRow> rows;
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (auto& r : snapshot_metrics(preds[k], ds.snapshots[ds.index_of(times[k])], ds.domain, times[k])) {
      rows.push_back(std::move(r));
    }
  }
  prepare_out_dir(a.out, a.force);
  write_json(fs::path(a.out) / "config.json", eval_args_json("eval", a));
  write_metrics_csv(fs::path(a.out) / "metrics.csv", rows);
  std::cout << metrics_csv_header() << "\n";
  for (const auto& r : rows) std::cout << metrics_csv_row(r) << "\n";

  if (a.growth) {
    const auto g = error_growth(ckpt, ds, a.growth_from, a.growth_to, a.period, mode);
    std::ofstream csv(fs::path(a.out) / "error_growth.csv");
    csv << "t,rmse,rmse_phase_avg\n";
    csv.precision(10);
    const auto avg = phase_average(g.raw, a.period);
    for (std::size_t i = 0; i < g.raw.size(); ++i) csv << g.raw[i].first << "," << g.raw[i].second << "," << avg[i].second << "\n";
    write_json(fs::path(a.out) / "error_growth.json",
               {{"from", a.growth_from}, {"to", a.growth_to}, {"period", a.period}, {"slope", g.fit.slope},
                {"intercept", g.fit.intercept}, {"r2_linear", g.fit.r2_linear}, {"exp_ratio", g.fit.exp_ratio}});
    std::printf("error growth on (%g, %g]: slope %.4e  r2_linear %.4f  exp_ratio %.3f\n", a.growth_from, a.growth_to,
                g.fit.slope, g.fit.r2_linear, g.fit.exp_ratio);
  }
  if (a.noise) {
    const auto cases = noise_study(ckpt, ds, times, *a.noise, a.seed);
    write_noise_csv(fs::path(a.out) / "noise.csv", cases);
    for (const auto& c : cases) std::printf("t=%g  R2 noisy %.5f  R2 model %.5f\n", c.time, c.r2_noisy, c.r2_model);
  }
  return 0;
}

int run_noise(const EvalArgs& a) {
  const auto ckpt = open_checkpoint(a.ckpt);
  const auto ds = open_dataset(a.data);
  const auto times = resolve_times(ds, a.times);
  const auto cases = noise_study(ckpt, ds, times, a.noise.value_or(0.1), a.seed);
  prepare_out_dir(a.out, a.force);
  write_json(fs::path(a.out) / "config.json", eval_args_json("noise", a));
  write_noise_csv(fs::path(a.out) / "noise.csv", cases);
  int better = 0;
  for (const auto& c : cases) {
    std::printf("t=%g  R2 noisy %.5f  R2 model %.5f\n", c.time, c.r2_noisy, c.r2_model);
    better += c.r2_model > c.r2_noisy ? 1 : 0;
  }
  std::printf("model output beats the noisy input in %d of %zu cases\n", better, cases.size());
  return 0;
}

// ---------------------------------------------------------------------------
// spectrum / convergence

struct SpectrumArgs {
  std::string ckpt, out;
  bool force = false;
};

int run_spectrum(const SpectrumArgs& a) {
  const auto ckpt = open_checkpoint(a.ckpt);
  const Generator gen = ckpt.model.generator();
  prepare_out_dir(a.out, a.force);
  write_json(fs::path(a.out) / "config.json", {{"command", "spectrum"}, {"ckpt", fs::absolute(a.ckpt).string()}});
  std::ofstream out(fs::path(a.out) / "spectrum.csv");
  out << "block,gamma,omega,re_lambda,im_lambda\n";
  out.precision(12);
  if (const auto* b = std::get_if<BlockDiagGenerator>(&gen)) {
    const Eigen::VectorXd gamma = b->gamma();
    for (Eigen::Index i = 0; i < gamma.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        out << i << "," << gamma(i) << "," << b->omega(i) << "," << -gamma(i) << "," << sign * b->omega(i) << "\n";
      }
    }
  } else {
    const auto ev = spectrum(gen);
    for (std::size_t i = 0; i < ev.size(); ++i) {
      out << i << "," << -ev[i].real() << "," << ev[i].imag() << "," << ev[i].real() << "," << ev[i].imag() << "\n";
    }
  }
  std::printf("||exp(A)||_2 = %.6f, ||exp(10 A)||_2 = %.6f\n", spectral_norm_expm(gen, 1.0), spectral_norm_expm(gen, 10.0));
  std::cout << "wrote " << generator_dim(gen) << " eigenvalues to " << (fs::path(a.out) / "spectrum.csv").string()
            << "\n";
  return 0;
}

struct ConvergenceArgs {
  int dim = 8, repeats = 20;
  double sigma = 0.01, dt = 0.1;
  std::vector<int> sizes = {64, 256, 1024, 4096};
  std::uint64_t seed = 0;
  std::string method = "log";
  std::string out;
  bool force = false;
};

int run_convergence(const ConvergenceArgs& a) {
  for (std::size_t i = 1; i < a.sizes.size(); ++i) {
    if (a.sizes[i] <= a.sizes[i - 1]) throw UsageError("--sizes must be increasing");
  }
  EdmdMode mode;
  if (a.method == "log") {
    mode = EdmdMode::MatrixLog;
  } else if (a.method == "small-step") {
    mode = EdmdMode::SmallStep;
  } else {
    throw UsageError("--method must be 'log' or 'small-step'");
  }
  const auto res = convergence_study(a.dim, a.sizes, a.sigma, a.seed, a.repeats, a.dt, mode);
  prepare_out_dir(a.out, a.force);
  write_json(fs::path(a.out) / "config.json",
             {{"command", "convergence"}, {"dim", a.dim}, {"sigma", a.sigma}, {"sizes", a.sizes}, {"repeats", a.repeats},
              {"seed", a.seed}, {"dt", a.dt}, {"method", a.method}});
  std::ofstream out(fs::path(a.out) / "convergence.csv");
  out << "samples,mean_error,std_error\n";
  out.precision(10);
  for (const auto& r : res.rows) {
    out << r.samples << "," << r.mean_error << "," << r.std_error << "\n";
    std::printf("M=%6d  error %.4e +- %.2e\n", r.samples, r.mean_error, r.std_error);
  }
  write_json(fs::path(a.out) / "summary.json", {{"slope", res.slope}, {"intercept", res.intercept}});
  std::printf("log-log slope %.4f\n", res.slope);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vision-transformer Koopman surrogates for coupled free-flow / porous-media benchmarks"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  GenArgs gen;
  add_gen(app, gen);
  TrainArgs tr;
  add_train(app, tr);

  EvalArgs pred, ev, noise;
  auto* predict_cmd = app.add_subcommand("predict", "Roll a checkpoint out to target times");
  add_common(predict_cmd, pred);
  predict_cmd->add_flag("--denormalize", pred.denormalize, "Write physical units");
  auto* eval_cmd = app.add_subcommand("eval", "Per-channel error metrics against the dataset");
  add_common(eval_cmd, ev);
  eval_cmd->add_flag("--error-growth", ev.growth, "Fit phase-averaged RMSE growth");
  eval_cmd->add_option("--growth-from", ev.growth_from);
  eval_cmd->add_option("--growth-to", ev.growth_to);
  eval_cmd->add_option("--period", ev.period, "Averaging window of the growth fit")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--noise", ev.noise, "Also run the noise study with this relative amplitude");
  eval_cmd->add_option("--seed", ev.seed);
  auto* noise_cmd = app.add_subcommand("noise", "Reconstruction of noise-corrupted inputs");
  add_common(noise_cmd, noise);
  noise_cmd->add_option("--delta", noise.noise, "Relative noise amplitude (default 0.1)");
  noise_cmd->add_option("--seed", noise.seed);

  SpectrumArgs spec;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Dump the learned generator's eigenvalues");
  spectrum_cmd->add_option("--ckpt", spec.ckpt, "Checkpoint directory")->required();
  spectrum_cmd->add_option("--out", spec.out, "Output directory")->required();
  spectrum_cmd->add_flag("--force", spec.force);

  ConvergenceArgs conv;
  auto* conv_cmd = app.add_subcommand("convergence", "Sample-size study of the least-squares generator fit");
  conv_cmd->add_option("--dim", conv.dim)->check(CLI::PositiveNumber);
  conv_cmd->add_option("--sigma", conv.sigma)->check(CLI::NonNegativeNumber);
  conv_cmd->add_option("--sizes", conv.sizes)->delimiter(',');
  conv_cmd->add_option("--repeats", conv.repeats)->check(CLI::PositiveNumber);
  conv_cmd->add_option("--seed", conv.seed);
  conv_cmd->add_option("--dt", conv.dt)->check(CLI::PositiveNumber);
  conv_cmd->add_option("--method", conv.method, "log or small-step");
  conv_cmd->add_option("--out", conv.out, "Output directory")->required();
  conv_cmd->add_flag("--force", conv.force);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    apply_thread_env();
    if (app.got_subcommand("gen")) return run_gen(gen);
    if (app.got_subcommand("train")) return run_train(tr);
    if (predict_cmd->parsed()) return run_predict(pred);
    if (eval_cmd->parsed()) return run_eval(ev);
    if (noise_cmd->parsed()) return run_noise(noise);
    if (spectrum_cmd->parsed()) return run_spectrum(spec);
    if (conv_cmd->parsed()) return run_convergence(conv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CorruptionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
