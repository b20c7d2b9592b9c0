#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vitk/checkpoint.hpp"
#include "vitk/dataset.hpp"
#include "vitk/loss.hpp"
#include "vitk/model.hpp"

namespace vitk {

using EpochCallback = std::function<void(const EpochLog&)>;

/// Loss terms of one full-batch pass over the training window, recorded on
/// `tape` so the caller can differentiate them.
LossTerms training_loss(ad::Tape& tape, KoopmanModel& model, const TrajectoryDataset& ds,
                        std::span<const Eigen::MatrixXd> patches, RolloutMode rollout, const LossWeights& w,
                        const LossOptions& options);

/// Encoder inputs of the training window.
std::vector<Eigen::MatrixXd> training_inputs(const KoopmanModel& model, const TrajectoryDataset& ds);

/// Joint optimization of encoder, generator, forcing head and decoder.
/// Throws NumericalError (with the last component map) on a non-finite loss.
Checkpoint train(const TrajectoryDataset& ds, const ModelConfig& model_config, const TrainConfig& cfg,
                 const LossWeights& w, const LossOptions& options = {}, const EpochCallback& on_epoch = {});

/// Continues optimizing an existing checkpoint for cfg.epochs more epochs.
Checkpoint train_from(Checkpoint start, const TrajectoryDataset& ds, const TrainConfig& cfg, const LossWeights& w,
                      const LossOptions& options = {}, const EpochCallback& on_epoch = {});

/// CSV header and row for the per-epoch training log.
std::string epoch_log_header();
std::string epoch_log_row(const EpochLog& e);

}  // namespace vitk
