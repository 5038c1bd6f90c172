// SPDX-License-Identifier: Apache-2.0
#include "core/adamw.hpp"

#include <cmath>

namespace tadiff {

AdamW::AdamW(std::vector<Tensor> params, AdamWOptions options)
    : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void AdamW::step(double lr) {
  ++step_count_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    auto theta = p.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    if (m.size() != theta.size()) {
      throw ShapeError("adamw: moment buffer of size " + std::to_string(m.size()) +
                       " for parameter " + shape_str(p.shape()));
    }
    const auto g = p.has_grad() ? p.grad() : std::span<const double>{};
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double gj = g.empty() ? 0.0 : g[j];
      m[j] = b1 * m[j] + (1.0 - b1) * gj;
      v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      theta[j] -= lr * (m_hat / (std::sqrt(v_hat) + options_.eps) + options_.weight_decay * theta[j]);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

double clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double f = max_norm / (norm + 1e-12);
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.mutable_grad()) g *= f;
    }
  }
  return norm;
}

} // namespace tadiff
