// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "core/annotation.hpp"

namespace tadiff {

struct Proposal {
  TemporalInterval interval;
  double score = 0.0; // [0, 1]
  std::string video_id;
};

/// |a ∩ b| / |a ∪ b|; 0 when the union is empty.
double temporal_iou(const TemporalInterval& a, const TemporalInterval& b);

/// Descending score; ties by earlier start, then earlier end, then video id.
bool proposal_before(const Proposal& a, const Proposal& b);

struct NmsOptions {
  double iou_threshold = 0.5;
  bool soft = false;        // Gaussian score decay instead of removal
  double soft_sigma = 0.5;
  double soft_min_score = 0.001;
};

/// Greedy suppression over one video's proposals in proposal_before order.
/// Hard mode drops any proposal whose tIoU with a kept one exceeds the
/// threshold.
std::vector<Proposal> nms(std::vector<Proposal> proposals, const NmsOptions& opts = {});

/// Interpolated average precision in percent. Each proposal is matched to
/// the unmatched ground truth of its video with the highest tIoU, provided
/// that tIoU exceeds the threshold. Throws ContractError without ground truth.
double average_precision(std::span<const Proposal> proposals, std::span<const ForgeryAnnotation> truth,
                         double tiou_threshold);

/// Recall (percent) of ground-truth segments covered, with tIoU above the
/// threshold, by one of the top-n proposals of their video, averaged over
/// the given thresholds. Throws ContractError without ground truth.
double average_recall(std::span<const Proposal> proposals, std::span<const ForgeryAnnotation> truth, std::size_t n,
                      std::span<const double> tiou_thresholds);

/// J = |mu_a - mu_b|^2 / (tr S_a + tr S_b), each trace floored at
/// `variance_floor`. Throws ContractError unless each class has two samples
/// of equal dimension.
double fisher_score(std::span<const std::vector<double>> class_a, std::span<const std::vector<double>> class_b,
                    double variance_floor = 1e-12);

} // namespace tadiff
