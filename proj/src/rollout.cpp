#include "vitk/rollout.hpp"

#include <cmath>
#include <optional>

#include "vitk/errors.hpp"

namespace vitk {
namespace {

void check_compatible(const Checkpoint& ckpt, const TrajectoryDataset& ds) {
  if (ds.snapshots.empty()) throw PreconditionError("rollout: dataset has no snapshots");
  const auto& mc = ckpt.model.config();
  if (ds.domain.grid_h != mc.grid_h || ds.domain.grid_w != mc.grid_w) {
    throw PreconditionError("rollout: dataset grid does not match the checkpoint");
  }
  if (!ds.normalized) throw PreconditionError("rollout: dataset must be normalized like the training data");
  for (int c = 0; c < kPhysicalChannels; ++c) {
    const double a = ds.norm_stats.scale[static_cast<std::size_t>(c)];
    const double b = ckpt.norm_stats.scale[static_cast<std::size_t>(c)];
    if (std::abs(a - b) > 1e-6 * std::max(std::abs(a), std::abs(b))) {
      throw PreconditionError("rollout: dataset normalization differs from the checkpoint's");
    }
  }
}

}  // namespace

std::vector<LatentState> rollout_latents(const Checkpoint& ckpt, const TrajectoryDataset& ds,
                                         std::span<const double> times, RolloutMode mode) {
  check_compatible(ckpt, ds);
  const KoopmanModel& model = ckpt.model;
  const double t0 = ds.times.front();
  for (double t : times) {
    if (!(t >= t0 - 1e-12)) throw PreconditionError("rollout: requested time precedes t0");
  }
  const Generator gen = model.generator();
  const bool forced = model.config().generator_mode == GeneratorMode::Forced;
  std::optional<ForcingHead> head;
  if (forced) head = model.forcing_head();

  const LatentState g0 = model.encode(ds.snapshots.front());
  const LatentState natural0 = forced ? LatentState(g0 - (*head)(t0)) : g0;

  std::vector<LatentState> out;
  out.reserve(times.size());
  if (mode == RolloutMode::Direct) {
    for (double t : times) {
      LatentState z = evolve(gen, natural0, std::max(0.0, t - t0));
      if (forced) z += (*head)(t);
      out.push_back(std::move(z));
    }
    return out;
  }

  const double dt = ckpt.dt;
  if (!(dt > 0.0)) throw PreconditionError("rollout: checkpoint has no positive step");
  const Eigen::MatrixXd step = transition_matrix(gen, dt);
  for (double t : times) {
    const double steps_real = (t - t0) / dt;
    const long steps = std::lround(steps_real);
    if (std::abs(steps_real - static_cast<double>(steps)) > 1e-6) {
      throw PreconditionError("recursive rollout: time " + std::to_string(t) + " is not on the step grid");
    }
    LatentState z = natural0;
    for (long s = 0; s < steps; ++s) z = step * z;
    if (forced) z += (*head)(t);
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<FieldSnapshot> rollout(const Checkpoint& ckpt, const TrajectoryDataset& ds, std::span<const double> times,
                                   RolloutMode mode) {
  std::vector<FieldSnapshot> out;
  for (const auto& z : rollout_latents(ckpt, ds, times, mode)) out.push_back(ckpt.model.decode(z));
  return out;
}

FieldSnapshot denormalize(const FieldSnapshot& snapshot, const NormStats& stats) {
  FieldSnapshot out = snapshot;
  for (int c = 0; c < kPhysicalChannels; ++c) out.values.col(c) *= stats.scale[static_cast<std::size_t>(c)];
  return out;
}

}  // namespace vitk
