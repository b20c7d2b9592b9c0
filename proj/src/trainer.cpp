#include "vitk/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "vitk/errors.hpp"
#include "vitk/optimizer.hpp"

namespace vitk {
namespace {

std::string describe(const std::map<std::string, double>& components) {
  std::ostringstream os;
  os.precision(6);
  bool first = true;
  for (const auto& [k, v] : components) {
    os << (first ? "" : ", ") << k << "=" << v;
    first = false;
  }
  return os.str();
}

void check_dataset(const KoopmanModel& model, const TrajectoryDataset& ds) {
  if (!ds.normalized) throw PreconditionError("training requires a normalized dataset");
  if (ds.train_count() == 0) throw PreconditionError("training window is empty");
  if (ds.domain.grid_h != model.config().grid_h || ds.domain.grid_w != model.config().grid_w) {
    throw ConfigError("model grid " + std::to_string(model.config().grid_h) + "x" +
                      std::to_string(model.config().grid_w) + " does not match dataset grid " +
                      std::to_string(ds.domain.grid_h) + "x" + std::to_string(ds.domain.grid_w));
  }
}

}  // namespace

std::vector<Eigen::MatrixXd> training_inputs(const KoopmanModel& model, const TrajectoryDataset& ds) {
  std::vector<Eigen::MatrixXd> patches;
  for (std::size_t k = 0; k < ds.train_count(); ++k) patches.push_back(model.encoder_input(ds.snapshots[k]));
  return patches;
}

LossTerms training_loss(ad::Tape& tape, KoopmanModel& model, const TrajectoryDataset& ds,
                        std::span<const Eigen::MatrixXd> patches, RolloutMode rollout, const LossWeights& w,
                        const LossOptions& options) {
  const auto k_count = static_cast<Eigen::Index>(patches.size());
  const std::span<const double> times(ds.times.data(), patches.size());
  const double t0 = times[0];

  ad::Var latents = model.encode(tape, patches);
  ad::Var g0 = ad::slice_cols(latents, 0, 1);
  ad::Var evolved;
  if (rollout == RolloutMode::Direct) {
    evolved = model.propagate(tape, g0, t0, times);
  } else {
    std::vector<ad::Var> cols{g0};
    for (Eigen::Index k = 1; k < k_count; ++k) {
      const double next[] = {times[static_cast<std::size_t>(k)]};
      cols.push_back(model.propagate(tape, cols.back(), times[static_cast<std::size_t>(k - 1)], next));
    }
    evolved = k_count == 1 ? g0 : ad::concat_cols(cols);
  }
  ad::Var preds = model.decode(tape, evolved);

  std::optional<ad::Var> residual;
  std::vector<ad::Var> residuals;
  for (int s = 1; s <= options.linearity_span && s < k_count; ++s) {
    const Eigen::Index m = k_count - s;
    residuals.push_back(model.linear_residual(tape, ad::slice_cols(latents, 0, m), ad::slice_cols(latents, s, m),
                                              times.subspan(0, static_cast<std::size_t>(m)),
                                              times.subspan(static_cast<std::size_t>(s), static_cast<std::size_t>(m))));
  }
  if (!residuals.empty()) residual = residuals.size() == 1 ? residuals[0] : ad::concat_cols(residuals);

  return composite_loss(tape, preds, std::span<const FieldSnapshot>(ds.snapshots.data(), patches.size()), ds.domain,
                        residual, w, options);
}

Checkpoint train_from(Checkpoint ckpt, const TrajectoryDataset& ds, const TrainConfig& cfg, const LossWeights& w,
                      const LossOptions& options, const EpochCallback& on_epoch) {
  cfg.validate();
  w.validate();
  if (options.linearity_span < 1) throw ConfigError("linearity_span must be at least 1");
  KoopmanModel& model = ckpt.model;
  check_dataset(model, ds);
  if (cfg.deterministic) Eigen::setNbThreads(1);

  auto& params = model.parameters();
  for (auto& p : params) p.lr_scale = p.name.starts_with("koopman.") ? cfg.generator_lr_scale : 1.0;
  const std::vector<Eigen::MatrixXd> patches = training_inputs(model, ds);
  AdamW optimizer(cfg.weight_decay);
  std::map<std::string, double> last_components;
  const int first_epoch = ckpt.history.empty() ? 0 : ckpt.history.back().epoch + 1;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg);
    ad::Tape tape;
    LossTerms terms = training_loss(tape, model, ds, patches, cfg.rollout_mode, w, options);
    const auto components = terms.components();
    if (!std::isfinite(components.at("total"))) {
      throw NumericalError("non-finite loss at epoch " + std::to_string(first_epoch + epoch) +
                           "; components: " + describe(components) + "; previous epoch: " + describe(last_components));
    }
    last_components = components;
    for (auto& p : params) p.zero_grad();
    tape.backward(terms.total);
    optimizer.step(params, lr);

    EpochLog log{first_epoch + epoch,          lr,
                 components.at("total"),       components.at("loss_u1"),
                 components.at("loss_u2"),     components.at("loss_p"),
                 components.at("loss_phi"),    components.at("loss_lin")};
    ckpt.history.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  for (auto& p : params) p.lr_scale = 1.0;
  round_to_storage_precision(model);
  ckpt.train = cfg;
  ckpt.weights = w;
  ckpt.loss = options;
  return ckpt;
}

Checkpoint train(const TrajectoryDataset& ds, const ModelConfig& model_config, const TrainConfig& cfg,
                 const LossWeights& w, const LossOptions& options, const EpochCallback& on_epoch) {
  cfg.validate();
  if (ds.domain.grid_h != model_config.grid_h || ds.domain.grid_w != model_config.grid_w) {
    throw ConfigError("model grid " + std::to_string(model_config.grid_h) + "x" + std::to_string(model_config.grid_w) +
                      " does not match dataset grid " + std::to_string(ds.domain.grid_h) + "x" +
                      std::to_string(ds.domain.grid_w));
  }
  Checkpoint ckpt;
  ckpt.model = KoopmanModel(model_config, ds.domain.mask, cfg.seed);
  ckpt.example_id = ds.domain.example_id;
  ckpt.t0 = ds.times.empty() ? 0.0 : ds.times.front();
  ckpt.dt = ds.dt;
  ckpt.train_horizon = ds.train_horizon;
  ckpt.norm_stats = ds.norm_stats;
  return train_from(std::move(ckpt), ds, cfg, w, options, on_epoch);
}

std::string epoch_log_header() { return "epoch,lr,total,loss_u1,loss_u2,loss_p,loss_phi,loss_lin"; }

std::string epoch_log_row(const EpochLog& e) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", e.epoch, e.lr, e.total, e.loss_u1,
                e.loss_u2, e.loss_p, e.loss_phi, e.loss_lin);
  return buf;
}

}  // namespace vitk
