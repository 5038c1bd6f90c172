// SPDX-License-Identifier: Apache-2.0
// Brute-force reference implementations of the ranking metrics. Written
// from the definitions, deliberately without sharing code or loop structure
// with eval/metrics.cpp.
#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <tuple>
#include <vector>

#include "core/rng.hpp"
#include "eval/metrics.hpp"

namespace tadiff::testing {

inline double oracle_iou(const TemporalInterval& a, const TemporalInterval& b) {
  const double lo = std::max(a.start_sec, b.start_sec);
  const double hi = std::min(a.end_sec, b.end_sec);
  if (hi <= lo) return 0.0;
  const double inter = hi - lo;
  return inter / (a.length() + b.length() - inter);
}

/// Ranking key: higher score first, then earlier start, earlier end, video id.
inline bool oracle_ranks_before(const Proposal& a, const Proposal& b) {
  return std::make_tuple(-a.score, a.interval.start_sec, a.interval.end_sec, a.video_id) <
         std::make_tuple(-b.score, b.interval.start_sec, b.interval.end_sec, b.video_id);
}

/// Repeatedly removes the best remaining proposal and every remaining one
/// overlapping it by more than the threshold.
inline std::vector<Proposal> oracle_nms(std::vector<Proposal> pool, double threshold) {
  std::vector<Proposal> kept;
  while (!pool.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i)
      if (oracle_ranks_before(pool[i], pool[best])) best = i;
    const Proposal top = pool[best];
    kept.push_back(top);
    std::vector<Proposal> rest;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (i != best && oracle_iou(top.interval, pool[i].interval) <= threshold) rest.push_back(pool[i]);
    pool = std::move(rest);
  }
  return kept;
}

/// Ground truth flattened to (video, interval) with a used flag.
struct OracleGt {
  std::string video;
  TemporalInterval interval;
  bool used = false;
};

inline std::vector<OracleGt> flatten(const std::vector<ForgeryAnnotation>& truth) {
  std::vector<OracleGt> out;
  for (const auto& a : truth)
    for (const auto& s : a.segments) out.push_back({a.video_id, s.interval, false});
  return out;
}

/// AP from the definition: walk the ranking, mark each proposal TP/FP by
/// matching the unused same-video GT of highest tIoU (first in annotation
/// order on ties) above the threshold, then average the interpolated
/// precision at each recall level k / n_gt, k = 1..n_gt.
inline double oracle_ap(std::vector<Proposal> props, const std::vector<ForgeryAnnotation>& truth, double threshold) {
  auto gts = flatten(truth);
  const auto n_gt = gts.size();
  std::sort(props.begin(), props.end(), oracle_ranks_before);
  std::vector<double> prec, rec;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < props.size(); ++i) {
    OracleGt* match = nullptr;
    double match_iou = threshold;
    for (auto& g : gts) {
      if (g.used || g.video != props[i].video_id) continue;
      const double iou = oracle_iou(g.interval, props[i].interval);
      if (iou > match_iou) {
        match = &g;
        match_iou = iou;
      }
    }
    if (match) {
      match->used = true;
      ++tp;
    }
    prec.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    rec.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }
  double total = 0.0;
  for (std::size_t k = 1; k <= n_gt; ++k) {
    const double level = static_cast<double>(k) / static_cast<double>(n_gt);
    double best = 0.0;
    for (std::size_t i = 0; i < prec.size(); ++i)
      if (rec[i] >= level - 1e-12) best = std::max(best, prec[i]);
    total += best;
  }
  return 100.0 * total / static_cast<double>(n_gt);
}

/// AR from the definition: for each threshold and GT, scan the video's n
/// best proposals for one with tIoU above the threshold.
inline double oracle_ar(const std::vector<Proposal>& props, const std::vector<ForgeryAnnotation>& truth, std::size_t n,
                        const std::vector<double>& thresholds) {
  const auto gts = flatten(truth);
  double acc = 0.0;
  for (double thr : thresholds) {
    std::size_t hits = 0;
    for (const auto& g : gts) {
      std::vector<Proposal> mine;
      for (const auto& p : props)
        if (p.video_id == g.video) mine.push_back(p);
      std::sort(mine.begin(), mine.end(), oracle_ranks_before);
      bool hit = false;
      for (std::size_t i = 0; i < mine.size() && i < n; ++i) hit = hit || oracle_iou(mine[i].interval, g.interval) > thr;
      hits += hit ? 1 : 0;
    }
    acc += static_cast<double>(hits) / static_cast<double>(gts.size());
  }
  return 100.0 * acc / static_cast<double>(thresholds.size());
}

/// Small random instance: integer endpoints on [0, 12] and scores from a
/// coarse grid so that ties in score, position and tIoU occur often.
struct MetricInstance {
  std::vector<Proposal> proposals;
  std::vector<ForgeryAnnotation> truth;
};

inline MetricInstance random_metric_instance(Rng& rng, std::size_t max_props = 10, std::size_t max_gts = 5) {
  MetricInstance inst;
  const std::size_t videos = static_cast<std::size_t>(rng.uniform_int(1, 2));
  const std::size_t n_gt = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_gts)));
  for (std::size_t v = 0; v < videos; ++v) inst.truth.push_back({"v" + std::to_string(v), 12.0, {}});
  // Disjoint GT segments per video, drawn from a partition of [0, 12] into cells.
  std::vector<std::vector<int>> free_cells(videos, std::vector<int>{0, 1, 2, 3, 4, 5});
  for (std::size_t k = 0; k < n_gt; ++k) {
    auto& ann = inst.truth[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(videos) - 1))];
    auto& cells = free_cells[static_cast<std::size_t>(ann.video_id[1] - '0')];
    if (cells.empty()) continue;
    const auto pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cells.size()) - 1));
    const int cell = cells[pick];
    cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(pick));
    const double lo = 2.0 * cell + (rng.uniform() < 0.5 ? 0.0 : 0.5);
    const double hi = 2.0 * cell + (rng.uniform() < 0.5 ? 2.0 : 1.5);
    ann.segments.push_back({{lo, hi}, "m", Domain::A});
  }
  for (auto& a : inst.truth)
    std::sort(a.segments.begin(), a.segments.end(),
              [](const ForgerySegment& x, const ForgerySegment& y) { return x.interval.start_sec < y.interval.start_sec; });
  const std::size_t n_props = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(max_props)));
  for (std::size_t k = 0; k < n_props; ++k) {
    Proposal p;
    p.video_id = "v" + std::to_string(rng.uniform_int(0, static_cast<std::int64_t>(videos) - 1));
    const double a = 0.5 * static_cast<double>(rng.uniform_int(0, 23));
    const double len = 0.5 * static_cast<double>(rng.uniform_int(1, 8));
    p.interval = {a, std::min(12.0, a + len)};
    if (p.interval.end_sec <= p.interval.start_sec) p.interval.start_sec = p.interval.end_sec - 0.5;
    p.score = 0.1 * static_cast<double>(rng.uniform_int(1, 10));
    inst.proposals.push_back(p);
  }
  return inst;
}

inline std::size_t gt_count(const std::vector<ForgeryAnnotation>& truth) {
  std::size_t n = 0;
  for (const auto& a : truth) n += a.segments.size();
  return n;
}

inline bool same_proposals(const std::vector<Proposal>& a, const std::vector<Proposal>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].video_id != b[i].video_id || a[i].score != b[i].score ||
        a[i].interval.start_sec != b[i].interval.start_sec || a[i].interval.end_sec != b[i].interval.end_sec)
      return false;
  }
  return true;
}

struct OracleTally {
  std::size_t cases = 0;
  std::size_t nms_mismatch = 0;
  std::size_t ap_mismatch = 0;
  std::size_t ar_mismatch = 0;
};

/// Runs `cases` random instances (each with at least one ground truth)
/// through NMS (per video, thresholds 0.3 / 0.5 / 0.7), AP at both
/// threshold sets and AR@{1,2,5,10}.
inline OracleTally run_metric_oracles(std::uint64_t seed, std::size_t cases, double tolerance = 1e-9) {
  Rng rng(seed);
  OracleTally t;
  const std::vector<double> thresholds{0.75, 0.85, 0.95};
  const std::vector<double> loose{0.3, 0.5, 0.7};
  while (t.cases < cases) {
    auto inst = random_metric_instance(rng);
    if (gt_count(inst.truth) == 0) continue;
    ++t.cases;
    for (const auto& ann : inst.truth) {
      std::vector<Proposal> mine;
      for (const auto& p : inst.proposals)
        if (p.video_id == ann.video_id) mine.push_back(p);
      for (double thr : {0.3, 0.5, 0.7}) {
        if (!same_proposals(nms(mine, {.iou_threshold = thr}), oracle_nms(mine, thr))) ++t.nms_mismatch;
      }
    }
    for (const auto& set : {thresholds, loose}) {
      for (double thr : set) {
        const double got = average_precision(inst.proposals, inst.truth, thr);
        const double want = oracle_ap(inst.proposals, inst.truth, thr);
        if (std::abs(got - want) > tolerance) ++t.ap_mismatch;
      }
      for (std::size_t n : {1, 2, 5, 10}) {
        const double got = average_recall(inst.proposals, inst.truth, n, set);
        const double want = oracle_ar(inst.proposals, inst.truth, n, set);
        if (std::abs(got - want) > tolerance) ++t.ar_mismatch;
      }
    }
  }
  return t;
}

} // namespace tadiff::testing
