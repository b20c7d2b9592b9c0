#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vitk/dataset.hpp"
#include "vitk/model.hpp"
#include "vitk/train_config.hpp"

namespace vitk {

inline constexpr int kCheckpointVersion = 1;

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double total = 0.0;
  double loss_u1 = 0.0;
  double loss_u2 = 0.0;
  double loss_p = 0.0;
  double loss_phi = 0.0;
  double loss_lin = 0.0;
};

/// Trained model plus the context needed to roll it out and reproduce it.
struct Checkpoint {
  KoopmanModel model;
  TrainConfig train;
  LossWeights weights;
  LossOptions loss;
  ExampleId example_id = ExampleId::SdEx1;
  double t0 = 0.0;
  double dt = 0.1;
  double train_horizon = 1.0;
  NormStats norm_stats;
  std::vector<EpochLog> history;
};

/// Rounds every parameter to single precision, the on-disk format, so that a
/// checkpoint held in memory equals its saved form.
void round_to_storage_precision(KoopmanModel& model);

/// Writes ckpt.json (tensor index + configs) and ckpt.f32 into `dir`; both
/// files are replaced atomically.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace vitk
