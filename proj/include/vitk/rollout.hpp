#pragma once

#include <span>
#include <vector>

#include "vitk/checkpoint.hpp"
#include "vitk/dataset.hpp"
#include "vitk/train_config.hpp"

namespace vitk {

/// Latent trajectory from encode(x(t0)).  Direct mode applies exp((t - t0) A);
/// recursive mode repeats the one-step map of length ckpt.dt and needs every
/// target to sit on that grid.
std::vector<LatentState> rollout_latents(const Checkpoint& ckpt, const TrajectoryDataset& ds,
                                         std::span<const double> times, RolloutMode mode);

/// Decoded predictions (normalized units, masked to home regions).
std::vector<FieldSnapshot> rollout(const Checkpoint& ckpt, const TrajectoryDataset& ds, std::span<const double> times,
                                   RolloutMode mode);

/// Multiplies the physical channels back by the normalization scales.
FieldSnapshot denormalize(const FieldSnapshot& snapshot, const NormStats& stats);

}  // namespace vitk
