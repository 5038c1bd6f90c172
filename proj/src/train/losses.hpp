// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "core/tensor.hpp"
#include "model/pyramid.hpp"
#include "train/targets.hpp"

namespace tadiff {

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

/// Sum over elements of the alpha-balanced sigmoid focal loss.
Tensor focal_loss_sum(const Tensor& logits, std::span<const double> labels, FocalParams p);
/// focal_loss_sum divided by max(1, number of positive labels).
Tensor focal_loss(const Tensor& logits, std::span<const double> labels, FocalParams p);

/// Sum of the elementwise smooth-L1 penalty (beta = 1) over rows whose mask
/// entry is nonzero. pred: [N x K]; target: N*K values; mask: N values.
Tensor smooth_l1_sum(const Tensor& pred, std::span<const double> target, std::span<const double> mask);
/// Mean smooth-L1 over all elements of pred against target.
Tensor smooth_l1(const Tensor& pred, std::span<const double> target);

struct LossTerms {
  Tensor cls;
  Tensor reg;
  Tensor total; // cls + reg
};

/// Pyramid-wide objective. Both terms are divided by `normalizer`, the
/// positive count (minimum 1); the regression term is additionally a mean
/// over the two offsets. A zero normalizer means "use targets.num_positive",
/// which a batch overrides with its total positive count.
LossTerms total_loss(const HeadOutputs& heads, const Targets& targets, FocalParams p, double normalizer = 0.0);

} // namespace tadiff
