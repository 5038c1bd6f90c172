// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "diffusion/tadiff.hpp"
#include "model/params.hpp"
#include "model/pyramid.hpp"

namespace tadiff {

struct ModelConfig {
  PyramidConfig pyramid;
  DiffusionConfig diffusion;

  void validate() const {
    pyramid.validate();
    diffusion.validate();
  }
};

enum class Phase { Train, Eval };

struct ForwardResult {
  PyramidFeatures pyramid;     // encoder output, before refinement
  std::vector<Tensor> refined; // features fed to the heads
  HeadOutputs heads;
};

/// Pyramid encoder, optional diffusion refiner (one shared denoiser applied to
/// every level) and detection heads.
class Localizer {
public:
  Localizer(const ModelConfig& cfg, std::uint64_t init_seed);

  Localizer(const Localizer&) = delete;
  Localizer& operator=(const Localizer&) = delete;

  /// `noise_seed` drives the level-indexed noise streams. Eval phase always
  /// runs the reverse chain deterministically (eta = 0).
  ForwardResult forward(const Tensor& frames, Phase phase, std::uint64_t noise_seed) const;

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  const std::optional<DiffusionSchedule>& schedule() const { return schedule_; }
  const Denoiser* denoiser() const { return denoiser_ ? &*denoiser_ : nullptr; }

private:
  ModelConfig cfg_;
  ParameterStore store_;
  std::unique_ptr<PyramidEncoder> encoder_;
  std::optional<Denoiser> denoiser_;
  std::unique_ptr<DetectionHeads> heads_;
  std::optional<DiffusionSchedule> schedule_;
};

} // namespace tadiff
