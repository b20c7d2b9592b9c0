#pragma once

#include <vector>

#include "vitk/autodiff.hpp"
#include "vitk/train_config.hpp"

namespace vitk {

/// Linear warmup from 0 to peak_lr, then cosine decay to peak_lr / 100 at
/// the final epoch.
double lr_schedule(int epoch, const TrainConfig& cfg);

/// Adam with decoupled weight decay.  Decay is applied only to parameters
/// flagged `decay`; each parameter's step is scaled by its lr_scale.
class AdamW {
 public:
  AdamW(double weight_decay, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::vector<ad::Parameter>& params, double lr);
  int steps() const { return steps_; }

 private:
  double weight_decay_, beta1_, beta2_, eps_;
  int steps_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

}  // namespace vitk
