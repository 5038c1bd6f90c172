// SPDX-License-Identifier: Apache-2.0
#include "train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace tadiff {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train.epochs must be positive");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (warmup_epochs > epochs) throw ConfigError("train.warmup_epochs exceeds train.epochs");
  if (!(lr > 0)) throw ConfigError("train.lr must be positive");
  if (weight_decay < 0) throw ConfigError("train.weight_decay must be non-negative");
  if (clip_norm < 0) throw ConfigError("train.clip_norm must be non-negative");
  if (!(focal.alpha >= 0 && focal.alpha <= 1)) throw ConfigError("train.focal_alpha must be in [0,1]");
  if (focal.gamma < 0) throw ConfigError("train.focal_gamma must be non-negative");
}

std::vector<TrainSample> prepare_samples(const Manifest& m, const PyramidConfig& pyramid,
                                         const AssignmentConfig& assignment) {
  if (m.videos.empty()) throw DataError("training set is empty");
  assignment.validate(pyramid.levels);
  std::vector<TrainSample> out;
  out.reserve(m.videos.size());
  for (const auto& v : m.videos) {
    try {
      auto seq = load_video(m, v);
      if (seq.features.cols() != pyramid.input_dim) {
        throw DataError("feature dim " + std::to_string(seq.features.cols()) + " != model input_dim " +
                        std::to_string(pyramid.input_dim));
      }
      TrainSample s;
      s.video_id = v.id;
      s.geometry = pyramid_geometry(seq.features.rows(), pyramid.levels);
      s.targets = assign_targets(v.annotation(), v.fps, s.geometry, assignment);
      s.frames = seq.features;
      out.push_back(std::move(s));
    } catch (const DataError& e) {
      throw DataError("video " + v.id + ": " + e.what());
    } catch (const ConfigError& e) {
      throw DataError("video " + v.id + ": " + e.what());
    }
  }
  return out;
}

double scheduled_lr(const TrainConfig& cfg, std::size_t step, std::size_t steps_per_epoch) {
  const double warm = static_cast<double>(cfg.warmup_epochs * steps_per_epoch);
  const double total = static_cast<double>(cfg.epochs * steps_per_epoch);
  const double s = static_cast<double>(step);
  if (s < warm) return cfg.lr * (s + 1.0) / warm;
  if (total <= warm) return cfg.lr;
  const double progress = std::min(1.0, (s - warm) / (total - warm));
  return cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

AdamWOptions adamw_options(const TrainConfig& cfg) {
  AdamWOptions o;
  o.lr = cfg.lr;
  o.weight_decay = cfg.weight_decay;
  return o;
}

} // namespace

Trainer::Trainer(Localizer& model, TrainConfig cfg)
    : model_(model), cfg_(std::move(cfg)), params_(model.params().tensors()), opt_(params_, adamw_options(cfg_)) {
  cfg_.validate();
}

EpochLog Trainer::run_epoch(std::span<const TrainSample> data) {
  if (data.empty()) throw DataError("training set is empty");
  const std::size_t epoch = epochs_done_;
  const std::size_t n = data.size();
  const std::size_t batches = (n + cfg_.batch_size - 1) / cfg_.batch_size;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(cfg_.seed, "order", epoch));
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(order[i - 1], order[j]);
  }

  EpochLog log;
  log.epoch = epoch + 1;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * cfg_.batch_size;
    const std::size_t hi = std::min(n, lo + cfg_.batch_size);
    double npos = 0.0;
    for (std::size_t i = lo; i < hi; ++i) npos += static_cast<double>(data[order[i]].targets.num_positive);

    opt_.zero_grad();
    double batch_loss = 0.0, batch_cls = 0.0, batch_reg = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t idx = order[i];
      const auto& s = data[idx];
      const auto fwd = model_.forward(s.frames, Phase::Train, derive_seed(cfg_.seed, "noise", epoch, idx));
      const auto terms = total_loss(fwd.heads, s.targets, cfg_.focal, std::max(1.0, npos));
      terms.total.backward();
      batch_loss += terms.total.item();
      batch_cls += terms.cls.item();
      batch_reg += terms.reg.item();
    }
    if (cfg_.clip_norm > 0) clip_grad_norm(params_, cfg_.clip_norm);
    const std::size_t step = static_cast<std::size_t>(opt_.step_count());
    log.lr = scheduled_lr(cfg_, step, batches);
    opt_.step(log.lr);

    log.loss += batch_loss;
    log.cls += batch_cls;
    log.reg += batch_reg;
  }
  opt_.zero_grad();
  log.loss /= static_cast<double>(batches);
  log.cls /= static_cast<double>(batches);
  log.reg /= static_cast<double>(batches);
  ++epochs_done_;
  return log;
}

std::vector<EpochLog> Trainer::fit(std::span<const TrainSample> data, const std::function<void(const EpochLog&)>& on_epoch) {
  std::vector<EpochLog> logs;
  while (epochs_done_ < cfg_.epochs) {
    logs.push_back(run_epoch(data));
    if (on_epoch) on_epoch(logs.back());
  }
  return logs;
}

OptimizerState Trainer::optimizer_state() const {
  return {opt_.step_count(), opt_.first_moments(), opt_.second_moments()};
}

void Trainer::restore(std::size_t epochs_done, const OptimizerState& state) {
  auto& m = opt_.first_moments();
  auto& v = opt_.second_moments();
  if (state.m.size() != m.size() || state.v.size() != v.size()) throw DataError("optimizer state does not match the model");
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (state.m[i].size() != m[i].size() || state.v[i].size() != v[i].size()) {
      throw DataError("optimizer state does not match the model");
    }
  }
  m = state.m;
  v = state.v;
  opt_.set_step_count(state.step);
  epochs_done_ = epochs_done;
}

} // namespace tadiff
