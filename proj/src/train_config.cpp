#include "vitk/train_config.hpp"

#include <algorithm>
#include <cctype>

#include "vitk/errors.hpp"

namespace vitk {

std::string to_string(RolloutMode mode) { return mode == RolloutMode::Direct ? "direct" : "recursive"; }

RolloutMode parse_rollout_mode(std::string_view text) {
  std::string lower(text);
  std::ranges::transform(lower, lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "direct") return RolloutMode::Direct;
  if (lower == "recursive") return RolloutMode::Recursive;
  throw ConfigError("unknown rollout mode '" + std::string(text) + "'");
}

void LossWeights::validate() const {
  for (double v : {w_u1, w_u2, w_p, w_phi, lambda_lin}) {
    if (!(v >= 0.0)) throw ConfigError("loss weights must be non-negative");
  }
}

LossWeights LossWeights::for_example(ExampleId id) {
  if (id == ExampleId::SdEx1) return {3.0, 5.0, 0.05, 1.0, 1.0};
  return {3.0, 3.0, 1.0, 1.0, 1.0};
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (warmup_epochs < 0 || warmup_epochs > epochs) throw ConfigError("warmup_epochs must lie in [0, epochs]");
  if (!(peak_lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  if (!(generator_lr_scale > 0.0)) throw ConfigError("generator_lr_scale must be positive");
}

}  // namespace vitk
