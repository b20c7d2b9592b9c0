#include "vitk/loss.hpp"

#include "vitk/errors.hpp"

namespace vitk {
namespace {

// Pixel pairs (p, q) of horizontally or vertically adjacent cells that both
// lie in the region, repeated for each of `batch` stacked images.
void neighbour_pairs(const DomainSpec& domain, const std::vector<std::uint8_t>& region, Eigen::Index batch,
                     int channel, Eigen::Index rows, std::vector<int>& from, std::vector<int>& to) {
  const int h = domain.grid_h;
  const int w = domain.grid_w;
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        const int p = i * w + j;
        if (region[static_cast<std::size_t>(p)] == 0) continue;
        for (const int q : {j + 1 < w ? p + 1 : -1, i + 1 < h ? p + w : -1}) {
          if (q < 0 || region[static_cast<std::size_t>(q)] == 0) continue;
          from.push_back(static_cast<int>(b * hw + p + channel * rows));
          to.push_back(static_cast<int>(b * hw + q + channel * rows));
        }
      }
    }
  }
}

}  // namespace

std::map<std::string, double> LossTerms::components() const {
  std::map<std::string, double> out;
  out["total"] = total.scalar();
  out["loss_u1"] = fields[kU1].scalar();
  out["loss_u2"] = fields[kU2].scalar();
  out["loss_p"] = fields[kP].scalar();
  out["loss_phi"] = fields[kPhi].scalar();
  out["loss_lin"] = linearity ? linearity->scalar() : 0.0;
  if (h1) out["loss_h1"] = h1->scalar();
  return out;
}

LossTerms composite_loss(ad::Tape& tape, ad::Var preds, std::span<const FieldSnapshot> targets,
                         const DomainSpec& domain, std::optional<ad::Var> residual, const LossWeights& w,
                         const LossOptions& options) {
  w.validate();
  const auto batch = static_cast<Eigen::Index>(targets.size());
  const Eigen::Index hw = domain.pixels();
  if (batch == 0) throw PreconditionError("composite_loss: no targets");
  if (preds.rows() != batch * hw || preds.cols() != kPhysicalChannels) {
    throw PreconditionError("composite_loss: predictions are " + std::to_string(preds.rows()) + "x" +
                            std::to_string(preds.cols()) + ", expected " + std::to_string(batch * hw) + "x" +
                            std::to_string(kPhysicalChannels));
  }
  Eigen::MatrixXd target(batch * hw, kPhysicalChannels);
  for (Eigen::Index k = 0; k < batch; ++k) {
    const auto& v = targets[static_cast<std::size_t>(k)].values;
    if (v.rows() != hw || v.cols() < kPhysicalChannels) throw PreconditionError("composite_loss: target shape mismatch");
    target.middleRows(k * hw, hw) = v.leftCols(kPhysicalChannels);
  }

  LossTerms terms;
  std::vector<ad::Var> parts;
  std::vector<double> coeffs;
  const std::array<double, kPhysicalChannels> weight{w.w_u1, w.w_u2, w.w_p, w.w_phi};
  std::array<std::vector<std::uint8_t>, kPhysicalChannels> regions;
  for (int c = 0; c < kPhysicalChannels; ++c) {
    const auto home = home_region(domain, c);
    auto& tiled = regions[static_cast<std::size_t>(c)];
    tiled.reserve(static_cast<std::size_t>(batch * hw));
    for (Eigen::Index k = 0; k < batch; ++k) tiled.insert(tiled.end(), home.begin(), home.end());
    ad::Var term = c == kP && options.huber_pressure
                       ? ad::masked_column_huber(preds, target, c, tiled, options.huber_delta)
                       : ad::masked_column_mse(preds, target, c, tiled);
    terms.fields[static_cast<std::size_t>(c)] = term;
    parts.push_back(term);
    coeffs.push_back(weight[static_cast<std::size_t>(c)]);
  }

  if (residual && residual->cols() > 0) {
    ad::Var lin = ad::scale(ad::sum_squares(*residual), 1.0 / static_cast<double>(residual->cols()));
    terms.linearity = lin;
    parts.push_back(lin);
    coeffs.push_back(w.lambda_lin);
  }

  if (options.h1_weight > 0.0) {
    std::vector<ad::Var> grads;
    std::vector<double> grad_coeffs;
    for (int c = 0; c < kPhysicalChannels; ++c) {
      std::vector<int> from, to;
      neighbour_pairs(domain, home_region(domain, c), batch, c, batch * hw, from, to);
      if (from.empty()) continue;
      Eigen::MatrixXd target_diff(static_cast<Eigen::Index>(from.size()), 1);
      for (std::size_t i = 0; i < from.size(); ++i) {
        target_diff(static_cast<Eigen::Index>(i), 0) = target.data()[to[i]] - target.data()[from[i]];
      }
      const auto n = static_cast<Eigen::Index>(from.size());
      ad::Var diff = ad::sub(ad::gather(preds, std::move(to), n, 1), ad::gather(preds, std::move(from), n, 1));
      grads.push_back(ad::sum_squares(ad::sub(diff, tape.constant(std::move(target_diff)))));
      grad_coeffs.push_back(1.0 / static_cast<double>(n));
    }
    if (!grads.empty()) {
      ad::Var h1 = ad::weighted_sum(grads, grad_coeffs);
      terms.h1 = h1;
      parts.push_back(h1);
      coeffs.push_back(options.h1_weight);
    }
  }

  terms.total = ad::weighted_sum(parts, coeffs);
  return terms;
}

}  // namespace vitk
