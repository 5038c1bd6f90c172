// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "core/tensor.hpp"

namespace tadiff {

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Bias-corrected AdamW with decoupled weight decay:
///   theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)
class AdamW {
public:
  AdamW(std::vector<Tensor> params, AdamWOptions options);

  /// Applies one update from the params' accumulated gradients, using
  /// `lr` in place of options().lr when given (schedulers).
  void step(double lr);
  void step() { step(options_.lr); }
  void zero_grad();

  const AdamWOptions& options() const { return options_; }
  std::int64_t step_count() const { return step_count_; }

  // Moment buffers, exposed for checkpointing.
  std::vector<std::vector<double>>& first_moments() { return m_; }
  std::vector<std::vector<double>>& second_moments() { return v_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void set_step_count(std::int64_t n) { step_count_ = n; }

private:
  std::vector<Tensor> params_;
  AdamWOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t step_count_ = 0;
};

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_grad_norm(std::vector<Tensor>& params, double max_norm);

} // namespace tadiff
