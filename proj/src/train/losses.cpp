// SPDX-License-Identifier: Apache-2.0
#include "train/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tadiff {

namespace {

// sigmoid(x) and 1 - sigmoid(x) without cancellation.
std::pair<double, double> sigmoid_pair(double x) {
  if (x >= 0) {
    const double z = std::exp(-x);
    return {1.0 / (1.0 + z), z / (1.0 + z)};
  }
  const double z = std::exp(x);
  return {z / (1.0 + z), 1.0 / (1.0 + z)};
}

void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(want) + " values, got " + std::to_string(got));
  }
}

} // namespace

Tensor focal_loss_sum(const Tensor& logits, std::span<const double> labels, FocalParams fp) {
  check_size(labels.size(), logits.numel(), "focal_loss");
  const auto x = logits.data();
  const std::size_t n = x.size();
  std::vector<double> dx(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = labels[i];
    const auto [p, q] = sigmoid_pair(x[i]);
    // Binary cross-entropy with logits.
    const double ce = std::max(x[i], 0.0) - x[i] * y + std::log1p(std::exp(-std::abs(x[i])));
    const double one_minus_pt = y * q + (1.0 - y) * p;
    const double a = fp.alpha * y + (1.0 - fp.alpha) * (1.0 - y);
    const double m = fp.gamma == 0.0 ? 1.0 : std::pow(one_minus_pt, fp.gamma);
    total += a * m * ce;
    // d(1 - p_t)/dx = -p q (2y - 1)
    double dm = 0.0;
    if (fp.gamma != 0.0 && one_minus_pt > 0.0) {
      dm = fp.gamma * std::pow(one_minus_pt, fp.gamma - 1.0) * (-p * q * (2.0 * y - 1.0));
    }
    dx[i] = a * (dm * ce + m * (p - y));
  }
  return Tensor::make_op({1}, {total}, {logits}, [dx = std::move(dx)](std::span<const double> g, GradSinks in) {
    if (!in[0]) return;
    for (std::size_t i = 0; i < dx.size(); ++i) (*in[0])[i] += g[0] * dx[i];
  });
}

Tensor focal_loss(const Tensor& logits, std::span<const double> labels, FocalParams fp) {
  double npos = 0.0;
  for (double y : labels) npos += y > 0.5 ? 1.0 : 0.0;
  return scale(focal_loss_sum(logits, labels, fp), 1.0 / std::max(1.0, npos));
}

Tensor smooth_l1_sum(const Tensor& pred, std::span<const double> target, std::span<const double> mask) {
  check_size(target.size(), pred.numel(), "smooth_l1");
  const std::size_t rows = pred.rank() == 2 ? pred.rows() : pred.numel();
  check_size(mask.size(), rows, "smooth_l1 mask");
  const std::size_t k = rows == 0 ? 0 : pred.numel() / rows;
  const auto x = pred.data();
  std::vector<double> dx(x.size(), 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (mask[r] == 0.0) continue;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t i = r * k + j;
      const double d = x[i] - target[i];
      const double ad = std::abs(d);
      if (ad < 1.0) {
        total += 0.5 * d * d;
        dx[i] = d;
      } else {
        total += ad - 0.5;
        dx[i] = d > 0 ? 1.0 : -1.0;
      }
    }
  }
  return Tensor::make_op({1}, {total}, {pred}, [dx = std::move(dx)](std::span<const double> g, GradSinks in) {
    if (!in[0]) return;
    for (std::size_t i = 0; i < dx.size(); ++i) (*in[0])[i] += g[0] * dx[i];
  });
}

Tensor smooth_l1(const Tensor& pred, std::span<const double> target) {
  const std::size_t rows = pred.rank() == 2 ? pred.rows() : pred.numel();
  const std::vector<double> mask(rows, 1.0);
  return scale(smooth_l1_sum(pred, target, mask), 1.0 / static_cast<double>(std::max<std::size_t>(1, pred.numel())));
}

LossTerms total_loss(const HeadOutputs& heads, const Targets& targets, FocalParams fp, double normalizer) {
  const std::size_t levels = heads.logits.size();
  if (heads.offsets.size() != levels || targets.levels.size() != levels) {
    throw ShapeError("total_loss: head outputs and targets cover different level counts");
  }
  const double norm = std::max(1.0, normalizer > 0 ? normalizer : static_cast<double>(targets.num_positive));
  Tensor cls, reg;
  for (std::size_t l = 0; l < levels; ++l) {
    const auto& lt = targets.levels[l];
    Tensor c = focal_loss_sum(heads.logits[l], lt.labels, fp);
    cls = cls.defined() ? cls + c : c;
    Tensor r = smooth_l1_sum(heads.offsets[l], lt.offsets, lt.labels);
    reg = reg.defined() ? reg + r : r;
  }
  LossTerms out;
  out.cls = scale(cls, 1.0 / norm);
  out.reg = scale(reg, 1.0 / (2.0 * norm));
  out.total = out.cls + out.reg;
  return out;
}

} // namespace tadiff
