#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vitk/autodiff.hpp"
#include "vitk/dataset.hpp"
#include "vitk/train_config.hpp"

namespace vitk {

struct LossTerms {
  ad::Var total;
  std::array<ad::Var, kPhysicalChannels> fields;  // unweighted domain MSEs
  std::optional<ad::Var> linearity;               // unweighted L_lin
  std::optional<ad::Var> h1;

  /// total, loss_u1, loss_u2, loss_p, loss_phi, loss_lin (and loss_h1 when active).
  std::map<std::string, double> components() const;
};

/// Domain-weighted reconstruction loss plus lambda * L_lin.
///
/// preds stacks K predictions row-wise ((K*h*w) x 4) in the order of
/// `targets`.  `residual` holds the M latent linearity residuals as columns;
/// L_lin is the mean squared column norm.
LossTerms composite_loss(ad::Tape& tape, ad::Var preds, std::span<const FieldSnapshot> targets,
                         const DomainSpec& domain, std::optional<ad::Var> residual, const LossWeights& w,
                         const LossOptions& options = {});

}  // namespace vitk
