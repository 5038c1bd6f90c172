// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "core/adamw.hpp"
#include "data/manifest.hpp"
#include "model/localizer.hpp"
#include "train/checkpoint.hpp"
#include "train/losses.hpp"
#include "train/targets.hpp"

namespace tadiff {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  std::size_t warmup_epochs = 5; // linear warmup, then cosine decay to zero
  double lr = 1e-3;
  double weight_decay = 0.01;
  double clip_norm = 1.0; // 0 disables clipping
  FocalParams focal;
  AssignmentConfig assignment;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainSample {
  std::string video_id;
  Tensor frames; // [T x C_in]
  std::vector<LevelGeometry> geometry;
  Targets targets;
};

/// Loads every video and assigns its targets. All data problems surface
/// here, before any optimization step. Throws DataError on an empty set.
std::vector<TrainSample> prepare_samples(const Manifest& m, const PyramidConfig& pyramid,
                                         const AssignmentConfig& assignment);

struct EpochLog {
  std::size_t epoch = 0; // 1-based
  double loss = 0.0;     // mean of per-batch losses
  double cls = 0.0;
  double reg = 0.0;
  double lr = 0.0; // learning rate at the last step of the epoch
};

/// Learning rate at optimizer step `step` (0-based).
double scheduled_lr(const TrainConfig& cfg, std::size_t step, std::size_t steps_per_epoch);

/// Mini-batch AdamW over a fixed sample set. Gradients of a batch are
/// accumulated video by video; both loss terms are normalized by the
/// batch's positive count. Batch order and diffusion noise derive from
/// (seed, epoch, video), so a run resumed from an epoch boundary follows
/// the same trajectory as an uninterrupted one.
class Trainer {
public:
  Trainer(Localizer& model, TrainConfig cfg);

  EpochLog run_epoch(std::span<const TrainSample> data);
  std::vector<EpochLog> fit(std::span<const TrainSample> data,
                            const std::function<void(const EpochLog&)>& on_epoch = {});

  std::size_t epochs_done() const { return epochs_done_; }
  OptimizerState optimizer_state() const;
  void restore(std::size_t epochs_done, const OptimizerState& state);

private:
  Localizer& model_;
  TrainConfig cfg_;
  std::vector<Tensor> params_;
  AdamW opt_;
  std::size_t epochs_done_ = 0;
};

} // namespace tadiff
