#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "vitk/geometry.hpp"

namespace vitk {

enum class RolloutMode { Direct, Recursive };

std::string to_string(RolloutMode mode);
RolloutMode parse_rollout_mode(std::string_view text);

struct LossWeights {
  double w_u1 = 3.0;
  double w_u2 = 5.0;
  double w_p = 0.05;
  double w_phi = 1.0;
  double lambda_lin = 1.0;

  /// Throws ConfigError on a negative weight.
  void validate() const;
  /// Per-benchmark defaults: (3, 5, 0.05, 1) for the Stokes-Darcy case,
  /// (3, 3, 1, 1) otherwise.
  static LossWeights for_example(ExampleId id);
};

/// Loss variants kept behind flags.
struct LossOptions {
  bool huber_pressure = false;
  double huber_delta = 1.0;
  double h1_weight = 0.0;      // spatial-gradient penalty
  int linearity_span = 1;      // pairs (k, k+s) for s = 1..span
};

struct TrainConfig {
  int epochs = 1200;
  double peak_lr = 5e-4;
  double weight_decay = 2e-5;
  int warmup_epochs = 10;
  std::uint64_t seed = 0;
  RolloutMode rollout_mode = RolloutMode::Direct;
  /// Learning-rate multiplier applied to the generator parameters.
  double generator_lr_scale = 1.0;
  bool deterministic = false;

  void validate() const;
};

}  // namespace vitk
