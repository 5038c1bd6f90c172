// SPDX-License-Identifier: Apache-2.0
#include "eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace tadiff {

double temporal_iou(const TemporalInterval& a, const TemporalInterval& b) {
  const double inter = std::max(0.0, std::min(a.end_sec, b.end_sec) - std::max(a.start_sec, b.start_sec));
  const double uni = (a.end_sec - a.start_sec) + (b.end_sec - b.start_sec) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

bool proposal_before(const Proposal& a, const Proposal& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.interval.start_sec != b.interval.start_sec) return a.interval.start_sec < b.interval.start_sec;
  if (a.interval.end_sec != b.interval.end_sec) return a.interval.end_sec < b.interval.end_sec;
  return a.video_id < b.video_id;
}

std::vector<Proposal> nms(std::vector<Proposal> proposals, const NmsOptions& opts) {
  std::vector<Proposal> kept;
  if (!opts.soft) {
    std::stable_sort(proposals.begin(), proposals.end(), proposal_before);
    for (auto& p : proposals) {
      const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Proposal& k) {
        return temporal_iou(k.interval, p.interval) > opts.iou_threshold;
      });
      if (!suppressed) kept.push_back(std::move(p));
    }
    return kept;
  }
  while (!proposals.empty()) {
    auto best = std::min_element(proposals.begin(), proposals.end(), proposal_before);
    Proposal top = std::move(*best);
    proposals.erase(best);
    for (auto& p : proposals) {
      const double iou = temporal_iou(top.interval, p.interval);
      p.score *= std::exp(-(iou * iou) / opts.soft_sigma);
    }
    std::erase_if(proposals, [&](const Proposal& p) { return p.score < opts.soft_min_score; });
    kept.push_back(std::move(top));
  }
  return kept;
}

namespace {

using TruthIndex = std::map<std::string, std::vector<TemporalInterval>>;

TruthIndex index_truth(std::span<const ForgeryAnnotation> truth, std::size_t& total) {
  TruthIndex idx;
  total = 0;
  for (const auto& a : truth) {
    auto& v = idx[a.video_id];
    for (const auto& s : a.segments) v.push_back(s.interval);
    total += a.segments.size();
  }
  return idx;
}

} // namespace

double average_precision(std::span<const Proposal> proposals, std::span<const ForgeryAnnotation> truth,
                         double tiou_threshold) {
  std::size_t total = 0;
  const auto gt = index_truth(truth, total);
  if (total == 0) throw ContractError("average_precision: no ground-truth segments");

  std::vector<Proposal> sorted(proposals.begin(), proposals.end());
  std::stable_sort(sorted.begin(), sorted.end(), proposal_before);
  std::map<std::string, std::vector<bool>> used;
  for (const auto& [id, segs] : gt) used[id].assign(segs.size(), false);

  std::vector<double> precision, recall;
  double tp = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& p = sorted[i];
    const auto it = gt.find(p.video_id);
    if (it != gt.end()) {
      auto& u = used[p.video_id];
      double best = -1.0;
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < it->second.size(); ++j) {
        if (u[j]) continue;
        const double iou = temporal_iou(p.interval, it->second[j]);
        if (iou > tiou_threshold && iou > best) {
          best = iou;
          best_j = j;
        }
      }
      if (best >= 0.0) {
        u[best_j] = true;
        tp += 1.0;
      }
    }
    precision.push_back(tp / static_cast<double>(i + 1));
    recall.push_back(tp / static_cast<double>(total));
  }
  // Area under the precision envelope (max precision at recall >= r).
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return 100.0 * ap;
}

double average_recall(std::span<const Proposal> proposals, std::span<const ForgeryAnnotation> truth, std::size_t n,
                      std::span<const double> tiou_thresholds) {
  std::size_t total = 0;
  const auto gt = index_truth(truth, total);
  if (total == 0) throw ContractError("average_recall: no ground-truth segments");
  if (tiou_thresholds.empty()) throw ContractError("average_recall: no tIoU thresholds");

  std::map<std::string, std::vector<Proposal>> per_video;
  for (const auto& p : proposals) per_video[p.video_id].push_back(p);
  for (auto& [id, v] : per_video) {
    std::stable_sort(v.begin(), v.end(), proposal_before);
    if (v.size() > n) v.resize(n);
  }
  double sum = 0.0;
  for (double thr : tiou_thresholds) {
    std::size_t hit = 0;
    for (const auto& [id, segs] : gt) {
      const auto it = per_video.find(id);
      if (it == per_video.end()) continue;
      for (const auto& g : segs) {
        const bool covered = std::any_of(it->second.begin(), it->second.end(),
                                         [&](const Proposal& p) { return temporal_iou(p.interval, g) > thr; });
        hit += covered ? 1 : 0;
      }
    }
    sum += static_cast<double>(hit) / static_cast<double>(total);
  }
  return 100.0 * sum / static_cast<double>(tiou_thresholds.size());
}

double fisher_score(std::span<const std::vector<double>> class_a, std::span<const std::vector<double>> class_b,
                    double variance_floor) {
  if (class_a.size() < 2 || class_b.size() < 2) throw ContractError("fisher_score: need at least two samples per class");
  const std::size_t dim = class_a.front().size();
  const auto stats = [dim](std::span<const std::vector<double>> xs, std::vector<double>& mu) {
    mu.assign(dim, 0.0);
    for (const auto& x : xs) {
      if (x.size() != dim) throw ContractError("fisher_score: samples of different dimension");
      for (std::size_t c = 0; c < dim; ++c) mu[c] += x[c];
    }
    for (auto& m : mu) m /= static_cast<double>(xs.size());
    double trace = 0.0;
    for (const auto& x : xs)
      for (std::size_t c = 0; c < dim; ++c) trace += (x[c] - mu[c]) * (x[c] - mu[c]);
    return trace / static_cast<double>(xs.size());
  };
  std::vector<double> mu_a, mu_b;
  const double tr_a = stats(class_a, mu_a);
  const double tr_b = stats(class_b, mu_b);
  double between = 0.0;
  for (std::size_t c = 0; c < dim; ++c) between += (mu_a[c] - mu_b[c]) * (mu_a[c] - mu_b[c]);
  return between / (std::max(tr_a, variance_floor) + std::max(tr_b, variance_floor));
}

} // namespace tadiff
