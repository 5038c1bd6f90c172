// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "model/params.hpp"

namespace tadiff {

/// Feature-space diffusion settings. steps == 0, or both toggles off,
/// disables the refiner entirely.
struct DiffusionConfig {
  std::size_t steps = 3;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  /// Stochasticity used in training; evaluation always runs with eta = 0.
  double eta = 0.0;
  bool noise = true;
  bool denoise = true;
  std::size_t embed_dim = 64;

  bool active() const { return steps > 0 && (noise || denoise); }
  void validate() const;
};

/// Linear beta schedule. alpha_bar[0] = 1 and alpha_bar[s] = prod_{i<=s}(1 - beta_i).
struct DiffusionSchedule {
  std::size_t steps = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  double eta = 0.0;
  std::vector<double> betas;     // betas[s-1] = beta_s
  std::vector<double> alpha_bar; // size steps + 1

  /// sigma_s = eta * sqrt((1 - ab[s-1]) / (1 - ab[s])) * sqrt(1 - ab[s] / ab[s-1])
  double sigma(std::size_t s, double eta_override) const;
};

DiffusionSchedule build_schedule(std::size_t steps, double beta_start, double beta_end, double eta);

/// x_s = sqrt(ab_s) f + sqrt(1 - ab_s) eps, for 0 <= s <= S.
Tensor forward_diffuse(const Tensor& f, std::size_t s, const Tensor& eps, const DiffusionSchedule& sched);

struct NoisePrediction {
  Tensor eps_hat;
  Tensor x0_hat;
};

/// x0_hat = (x_s - sqrt(1 - ab_s) eps_hat) / sqrt(ab_s).
NoisePrediction recover_clean(const Tensor& x_s, std::size_t s, const Tensor& eps_hat,
                              const DiffusionSchedule& sched);

/// One reverse update:
///   x_{s-1} = sqrt(ab_{s-1}) x0_hat + sqrt(1 - ab_{s-1} - sigma_s^2) eps_hat + sigma_s z.
/// `z` may be undefined when sigma_s is zero.
Tensor ddim_step(const Tensor& x_s, std::size_t s, const Tensor& eps_hat, const Tensor& x0_hat, const Tensor& z,
                 const DiffusionSchedule& sched, double eta);

/// Step-conditioned temporal conv noise predictor. A learned step embedding
/// drives a FiLM generator whose per-channel (gamma, beta) modulate the
/// first conv block: h = relu((1 + gamma) * conv1(x) + beta), eps_hat = conv2(h).
class Denoiser {
public:
  Denoiser(std::size_t channels, const DiffusionConfig& cfg, ParameterStore& store, Rng& rng);

  Tensor predict_eps(const Tensor& x_s, std::size_t s) const;
  NoisePrediction predict_noise(const Tensor& x_s, std::size_t s, const DiffusionSchedule& sched) const;

  /// (gamma, beta) rows of shape [1 x C] for step s.
  std::pair<Tensor, Tensor> film(std::size_t s) const;

  std::size_t steps() const { return steps_; }

private:
  std::size_t channels_;
  std::size_t steps_;
  Tensor embed_;
  Tensor film_w1_, film_b1_, film_w2_, film_b2_;
  Tensor conv1_w_, conv1_b_, conv2_w_, conv2_b_;
};

using NoisePredictor = std::function<Tensor(const Tensor& x_s, std::size_t s)>;

struct RefineOptions {
  bool inject_noise = true;
  bool denoise = true;
  double eta = 0.0;
};

/// Perturb-then-denoise refinement of one feature sequence. With both
/// toggles on: diffuse f to s = S with eps ~ N(0, I) from `rng`, then run S
/// reverse steps. Noise-only returns the diffused features; denoise-only
/// starts the reverse chain from f itself.
Tensor refine(const NoisePredictor& predictor, const Tensor& f, const DiffusionSchedule& sched,
              const RefineOptions& options, Rng& rng);

Tensor standard_normal(const Shape& shape, Rng& rng);

} // namespace tadiff
