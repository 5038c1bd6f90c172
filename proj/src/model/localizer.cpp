// SPDX-License-Identifier: Apache-2.0
#include "model/localizer.hpp"

namespace tadiff {

Localizer::Localizer(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  // Independent init streams keep encoder/head weights identical across
  // diffusion ablations that share a seed.
  Rng enc_rng(derive_seed(init_seed, "encoder"));
  Rng diff_rng(derive_seed(init_seed, "tadiff"));
  Rng head_rng(derive_seed(init_seed, "heads"));
  encoder_ = std::make_unique<PyramidEncoder>(cfg_.pyramid, store_, enc_rng);
  if (cfg_.diffusion.active()) {
    const auto& d = cfg_.diffusion;
    schedule_ = build_schedule(d.steps, d.beta_start, d.beta_end, d.eta);
    if (d.denoise) denoiser_.emplace(cfg_.pyramid.channels, d, store_, diff_rng);
  }
  heads_ = std::make_unique<DetectionHeads>(cfg_.pyramid, store_, head_rng);
}

ForwardResult Localizer::forward(const Tensor& frames, Phase phase, std::uint64_t noise_seed) const {
  ForwardResult out;
  out.pyramid = (*encoder_)(frames);
  if (!schedule_) {
    out.refined = out.pyramid.levels;
  } else {
    RefineOptions opts;
    opts.inject_noise = cfg_.diffusion.noise;
    opts.denoise = cfg_.diffusion.denoise;
    opts.eta = phase == Phase::Train ? cfg_.diffusion.eta : 0.0;
    NoisePredictor predictor;
    if (denoiser_) predictor = [this](const Tensor& x, std::size_t s) { return denoiser_->predict_eps(x, s); };
    for (std::size_t l = 0; l < out.pyramid.levels.size(); ++l) {
      Rng rng(derive_seed(noise_seed, "level", l));
      out.refined.push_back(refine(predictor, out.pyramid.levels[l], *schedule_, opts, rng));
    }
  }
  out.heads = (*heads_)(out.refined);
  return out;
}

} // namespace tadiff
