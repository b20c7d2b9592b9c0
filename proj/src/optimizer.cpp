#include "vitk/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "vitk/errors.hpp"

namespace vitk {

double lr_schedule(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch >= cfg.epochs) throw PreconditionError("lr_schedule: epoch out of range");
  const double peak = cfg.peak_lr;
  if (epoch < cfg.warmup_epochs) return peak * epoch / cfg.warmup_epochs;
  const int span = cfg.epochs - 1 - cfg.warmup_epochs;
  if (span <= 0) return peak;
  const double eta_min = peak / 100.0;
  const double progress = static_cast<double>(epoch - cfg.warmup_epochs) / span;
  return eta_min + 0.5 * (peak - eta_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

void AdamW::step(std::vector<ad::Parameter>& params, double lr) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    }
  }
  if (m_.size() != params.size()) throw PreconditionError("AdamW: parameter list changed between steps");
  ++steps_;
  const double bc1 = 1.0 - std::pow(beta1_, steps_);
  const double bc2 = 1.0 - std::pow(beta2_, steps_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) continue;
    const double step = lr * p.lr_scale;
    if (p.decay && weight_decay_ > 0.0) p.value *= 1.0 - step * weight_decay_;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
    p.value.array() -= step * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

}  // namespace vitk
