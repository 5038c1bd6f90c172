// SPDX-License-Identifier: Apache-2.0
#include "diffusion/tadiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tadiff {

void DiffusionConfig::validate() const {
  if (steps == 0) return;
  if (!(beta_start > 0 && beta_start <= beta_end && beta_end < 1)) {
    throw ConfigError("diffusion: need 0 < beta_start <= beta_end < 1, got (" + std::to_string(beta_start) +
                      ", " + std::to_string(beta_end) + ")");
  }
  if (!(eta >= 0 && eta <= 1)) throw ConfigError("diffusion: eta must be in [0, 1]");
  if (embed_dim == 0) throw ConfigError("diffusion: embed_dim must be positive");
}

DiffusionSchedule build_schedule(std::size_t steps, double beta_start, double beta_end, double eta) {
  if (steps < 1) throw ConfigError("schedule: steps must be >= 1");
  if (!(beta_start > 0 && beta_start <= beta_end && beta_end < 1)) {
    throw ConfigError("schedule: need 0 < beta_start <= beta_end < 1");
  }
  if (!(eta >= 0 && eta <= 1)) throw ConfigError("schedule: eta must be in [0, 1]");
  DiffusionSchedule s;
  s.steps = steps;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.eta = eta;
  s.alpha_bar.push_back(1.0);
  for (std::size_t i = 1; i <= steps; ++i) {
    const double beta =
        steps == 1 ? beta_start
                   : beta_start + static_cast<double>(i - 1) * (beta_end - beta_start) / static_cast<double>(steps - 1);
    s.betas.push_back(beta);
    s.alpha_bar.push_back(s.alpha_bar.back() * (1.0 - beta));
  }
  return s;
}

double DiffusionSchedule::sigma(std::size_t s, double eta_override) const {
  if (s < 1 || s > steps) throw ContractError("schedule: step " + std::to_string(s) + " out of range");
  if (eta_override == 0.0) return 0.0;
  const double ab = alpha_bar[s], ab_prev = alpha_bar[s - 1];
  return eta_override * std::sqrt((1.0 - ab_prev) / (1.0 - ab)) * std::sqrt(1.0 - ab / ab_prev);
}

Tensor standard_normal(const Shape& shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.normal();
  return Tensor::from(shape, std::move(v));
}

Tensor forward_diffuse(const Tensor& f, std::size_t s, const Tensor& eps, const DiffusionSchedule& sched) {
  if (s > sched.steps) {
    throw ContractError("forward_diffuse: step " + std::to_string(s) + " outside [0, " + std::to_string(sched.steps) +
                        "]");
  }
  if (eps.shape() != f.shape()) {
    throw ShapeError("forward_diffuse: noise " + shape_str(eps.shape()) + " vs features " + shape_str(f.shape()));
  }
  const double ab = sched.alpha_bar[s];
  if (ab == 1.0) return f;
  return scale(f, std::sqrt(ab)) + scale(eps, std::sqrt(1.0 - ab));
}

NoisePrediction recover_clean(const Tensor& x_s, std::size_t s, const Tensor& eps_hat,
                              const DiffusionSchedule& sched) {
  if (s < 1 || s > sched.steps) throw ContractError("recover_clean: step " + std::to_string(s) + " out of range");
  const double ab = sched.alpha_bar[s];
  const Tensor x0 = scale(x_s - scale(eps_hat, std::sqrt(1.0 - ab)), 1.0 / std::sqrt(ab));
  return {eps_hat, x0};
}

Tensor ddim_step(const Tensor& x_s, std::size_t s, const Tensor& eps_hat, const Tensor& x0_hat, const Tensor& z,
                 const DiffusionSchedule& sched, double eta) {
  if (s < 1 || s > sched.steps) throw ContractError("ddim_step: step " + std::to_string(s) + " out of range");
  if (eps_hat.shape() != x_s.shape() || x0_hat.shape() != x_s.shape()) {
    throw ShapeError("ddim_step: prediction shapes do not match " + shape_str(x_s.shape()));
  }
  const double ab_prev = sched.alpha_bar[s - 1];
  const double sigma = sched.sigma(s, eta);
  double residual = 1.0 - ab_prev - sigma * sigma;
  if (residual < -1e-12) {
    throw ContractError("ddim_step: sigma^2 exceeds 1 - alpha_bar[s-1] at step " + std::to_string(s));
  }
  residual = std::max(residual, 0.0);
  Tensor out = scale(x0_hat, std::sqrt(ab_prev));
  if (residual > 0) out = out + scale(eps_hat, std::sqrt(residual));
  if (sigma > 0) {
    if (!z.defined() || z.shape() != x_s.shape()) throw ShapeError("ddim_step: eta > 0 requires z of matching shape");
    out = out + scale(z, sigma);
  }
  return out;
}

Denoiser::Denoiser(std::size_t channels, const DiffusionConfig& cfg, ParameterStore& store, Rng& rng)
    : channels_(channels), steps_(cfg.steps) {
  const std::size_t e = cfg.embed_dim, c = channels;
  embed_ = store.add("tadiff.step_embed", {steps_, e}, Init::Uniform, rng, 1);
  film_w1_ = store.add("tadiff.film.w1", {e, e}, Init::Uniform, rng, e);
  film_b1_ = store.add("tadiff.film.b1", {e}, Init::Zeros, rng);
  film_w2_ = store.add("tadiff.film.w2", {e, 2 * c}, Init::Zeros, rng);
  film_b2_ = store.add("tadiff.film.b2", {2 * c}, Init::Zeros, rng);
  conv1_w_ = store.add("tadiff.conv1.w", {3, c, c}, Init::Uniform, rng, 3 * c);
  conv1_b_ = store.add("tadiff.conv1.b", {c}, Init::Zeros, rng);
  conv2_w_ = store.add("tadiff.conv2.w", {3, c, c}, Init::Uniform, rng, 3 * c);
  conv2_b_ = store.add("tadiff.conv2.b", {c}, Init::Zeros, rng);
}

std::pair<Tensor, Tensor> Denoiser::film(std::size_t s) const {
  if (s < 1 || s > steps_) throw ContractError("denoiser: step " + std::to_string(s) + " out of range");
  const Tensor e = take_row(embed_, s - 1);
  const Tensor h = relu(add_row(matmul(e, film_w1_), film_b1_));
  const Tensor gb = add_row(matmul(h, film_w2_), film_b2_);
  return {slice_cols(gb, 0, channels_), slice_cols(gb, channels_, 2 * channels_)};
}

Tensor Denoiser::predict_eps(const Tensor& x_s, std::size_t s) const {
  const auto [gamma, beta] = film(s);
  Tensor h = add_row(conv1d(x_s, conv1_w_, 1, 1), conv1_b_);
  h = relu(add_row(mul_row(h, add_scalar(gamma, 1.0)), beta));
  return add_row(conv1d(h, conv2_w_, 1, 1), conv2_b_);
}

NoisePrediction Denoiser::predict_noise(const Tensor& x_s, std::size_t s, const DiffusionSchedule& sched) const {
  return recover_clean(x_s, s, predict_eps(x_s, s), sched);
}

Tensor refine(const NoisePredictor& predictor, const Tensor& f, const DiffusionSchedule& sched,
              const RefineOptions& options, Rng& rng) {
  const std::size_t steps = sched.steps;
  if (steps == 0 || (!options.inject_noise && !options.denoise)) return f;

  Tensor x = f;
  if (options.inject_noise) x = forward_diffuse(f, steps, standard_normal(f.shape(), rng), sched);
  if (!options.denoise) return x;

  for (std::size_t s = steps; s >= 1; --s) {
    const auto pred = recover_clean(x, s, predictor(x, s), sched);
    Tensor z;
    if (sched.sigma(s, options.eta) > 0) z = standard_normal(f.shape(), rng);
    x = ddim_step(x, s, pred.eps_hat, pred.x0_hat, z, sched, options.eta);
  }
  return x;
}

} // namespace tadiff
