// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>

#include "eval/evaluate.hpp"
#include "eval/metrics.hpp"
#include "support/oracles.hpp"

using namespace tadiff;
using namespace tadiff::testing;

namespace {

Proposal prop(double s, double e, double score, std::string vid = "v0") { return {{s, e}, score, std::move(vid)}; }

ForgeryAnnotation truth_of(std::string vid, std::vector<std::pair<double, double>> segs, double duration = 20.0) {
  ForgeryAnnotation a{std::move(vid), duration, {}};
  for (auto [s, e] : segs) a.segments.push_back({{s, e}, "m", Domain::A});
  return a;
}

/// One level of stride 1 whose only confident location is t.
HeadOutputs single_location(std::size_t n, std::size_t t, double ds, double de) {
  std::vector<double> logits(n, -100.0), offs(2 * n, 1.0);
  logits[t] = 3.0;
  offs[2 * t] = ds;
  offs[2 * t + 1] = de;
  HeadOutputs h;
  h.logits.push_back(Tensor::from({n, 1}, logits));
  h.offsets.push_back(Tensor::from({n, 2}, offs));
  return h;
}

} // namespace

TEST_SUITE("localization_eval") {

TEST_CASE("temporal IoU examples") {
  CHECK(temporal_iou({1, 3}, {2, 4}) == doctest::Approx(1.0 / 3.0));
  CHECK(temporal_iou({1, 3}, {1, 3}) == 1.0);
  CHECK(temporal_iou({1, 2}, {3, 4}) == 0.0);
  CHECK(temporal_iou({1, 2}, {2, 4}) == 0.0);
}

TEST_CASE("temporal IoU is symmetric and bounded") {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.uniform(0, 10), b = rng.uniform(0, 10);
    const TemporalInterval x{a, a + rng.uniform(0.01, 5)}, y{b, b + rng.uniform(0.01, 5)};
    const double u = temporal_iou(x, y);
    CHECK(u == temporal_iou(y, x));
    CHECK(u >= 0.0);
    CHECK(u <= 1.0);
    CHECK(temporal_iou(x, x) == 1.0);
  }
}

TEST_CASE("decode examples") {
  const std::vector<LevelGeometry> geo{{64, 1}};
  const auto p = decode_proposals(single_location(64, 32, 16, 16), geo, 64, 8.0, "v", {});
  REQUIRE(p.size() == 1);
  CHECK(p[0].interval.start_sec == 2.0);
  CHECK(p[0].interval.end_sec == 6.0);
  CHECK(p[0].video_id == "v");

  CHECK(decode_proposals(single_location(64, 32, 0, 0), geo, 64, 8.0, "v", {}).empty());

  const auto c = decode_proposals(single_location(64, 2, 10, 3), geo, 64, 8.0, "v", {});
  REQUIRE(c.size() == 1);
  CHECK(c[0].interval.start_sec == 0.0);
  CHECK(c[0].interval.end_sec == 5.0 / 8.0);

  const auto end = decode_proposals(single_location(64, 60, 2, 30), geo, 64, 8.0, "v", {});
  CHECK(end[0].interval.end_sec == 8.0);
}

TEST_CASE("decode scales by stride and keeps the best max_per_video") {
  const std::vector<LevelGeometry> geo{{16, 4}};
  const auto p = decode_proposals(single_location(16, 8, 4, 4), geo, 64, 8.0, "v", {});
  REQUIRE(p.size() == 1);
  CHECK(p[0].interval.start_sec == 2.0);
  CHECK(p[0].interval.end_sec == 6.0);

  HeadOutputs h;
  std::vector<double> logits(10), offs(20, 1.0);
  for (std::size_t i = 0; i < 10; ++i) logits[i] = static_cast<double>(i) - 5.0;
  h.logits.push_back(Tensor::from({10, 1}, logits));
  h.offsets.push_back(Tensor::from({10, 2}, offs));
  const auto top = decode_proposals(h, std::vector<LevelGeometry>{{10, 1}}, 10, 1.0, "v", {0.001, 3});
  REQUIRE(top.size() == 3);
  CHECK(top[0].interval.start_sec == 8.0);
  CHECK(top[2].interval.start_sec == 6.0);
  for (const auto& q : top) CHECK(q.score >= 0.001);
}

TEST_CASE("NMS examples") {
  const auto kept = nms({prop(1, 3, 0.8), prop(1, 3, 0.9)});
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == 0.9);
  CHECK(nms({prop(0, 1, 0.5), prop(2, 3, 0.7), prop(4, 5, 0.1)}).size() == 3);
  // Equal scores: earlier start wins.
  const auto tie = nms({prop(2, 4, 0.5), prop(1, 4, 0.5)});
  REQUIRE(tie.size() == 1);
  CHECK(tie[0].interval.start_sec == 1.0);
}

TEST_CASE("NMS output is a subset with bounded pairwise overlap") {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Proposal> in;
    for (int i = 0; i < 15; ++i) {
      const double a = rng.uniform(0, 10);
      in.push_back(prop(a, a + rng.uniform(0.1, 4), rng.uniform()));
    }
    const double thr = rng.uniform(0.1, 0.9);
    const auto out = nms(in, {.iou_threshold = thr});
    for (std::size_t i = 0; i < out.size(); ++i) {
      const bool member = std::any_of(in.begin(), in.end(), [&](const Proposal& p) {
        return p.score == out[i].score && p.interval.start_sec == out[i].interval.start_sec;
      });
      CHECK(member);
      for (std::size_t j = i + 1; j < out.size(); ++j) CHECK(temporal_iou(out[i].interval, out[j].interval) <= thr);
    }
  }
}

TEST_CASE("soft NMS decays overlapping scores instead of dropping them") {
  const auto out = nms({prop(0, 2, 0.9), prop(0, 2, 0.8), prop(5, 6, 0.3)}, {.soft = true});
  REQUIRE(out.size() == 3);
  CHECK(out[0].score == 0.9);
  CHECK(out[1].score == 0.3);
  CHECK(out[2].score == doctest::Approx(0.8 * std::exp(-1.0 / 0.5)));
}

TEST_CASE("AP examples") {
  // Proposal [0, 8] against GT [0, 10]: tIoU 0.8.
  const std::vector<ForgeryAnnotation> gt{truth_of("v0", {{0, 10}})};
  const std::vector<Proposal> p{prop(0, 8, 0.9)};
  CHECK(average_precision(p, gt, 0.75) == 100.0);
  CHECK(average_precision(p, gt, 0.85) == 0.0);
  CHECK(average_precision({}, gt, 0.5) == 0.0);
  CHECK_THROWS_AS(average_precision(p, std::vector<ForgeryAnnotation>{truth_of("v0", {})}, 0.5), ContractError);
}

TEST_CASE("AP mixed case: 3 proposals, 2 ground truths") {
  const std::vector<ForgeryAnnotation> gt{truth_of("v0", {{0, 4}, {10, 14}})};
  // Ranked: hit, miss, hit. Precision 1, 1/2, 2/3 at recall 1/2, 1/2, 1.
  // Interpolated: 1 at recall 1/2 and 2/3 at recall 1, so AP = (1 + 2/3) / 2.
  const std::vector<Proposal> p{prop(0, 4, 0.9), prop(5, 8, 0.8), prop(10, 14, 0.7)};
  CHECK(average_precision(p, gt, 0.5) == doctest::Approx(100.0 * (1.0 + 2.0 / 3.0) / 2.0));
  CHECK(average_precision(p, gt, 0.5) == doctest::Approx(oracle_ap(p, gt, 0.5)));
  // A duplicate of a matched GT is a false positive.
  const std::vector<Proposal> dup{prop(0, 4, 0.9), prop(0, 4, 0.8)};
  CHECK(average_precision(dup, gt, 0.5) == doctest::Approx(50.0));
}

TEST_CASE("AR examples") {
  const std::vector<ForgeryAnnotation> gt{truth_of("a", {{0, 4}}), truth_of("b", {{2, 6}})};
  const std::vector<double> thr{0.75, 0.85, 0.95};
  const std::vector<Proposal> exact{prop(0, 4, 0.9, "a"), prop(2, 6, 0.5, "b")};
  CHECK(average_recall(exact, gt, 1, thr) == 100.0);
  const std::vector<Proposal> three{prop(7, 9, 0.9, "a"), prop(1, 4, 0.8, "a"), prop(0, 4, 0.1, "a")};
  CHECK(average_recall(three, gt, 10, thr) == average_recall(three, gt, 3, thr));
  CHECK(average_recall(three, gt, 1, thr) == 0.0);
  CHECK(average_recall(three, gt, 3, thr) == 50.0);
  // tIoU 0.75 clears 0.7 but not 0.8.
  const std::vector<Proposal> partial{prop(1, 4, 0.9, "a")};
  CHECK(average_recall(partial, gt, 1, std::vector<double>{0.7, 0.8}) == doctest::Approx(25.0));
}

TEST_CASE("AP and AR are monotone in threshold and n") {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = random_metric_instance(rng);
    if (gt_count(inst.truth) == 0) continue;
    double prev_ap = 101, prev_ar = 101;
    for (double thr : {0.1, 0.3, 0.5, 0.75, 0.85, 0.95}) {
      const double ap = average_precision(inst.proposals, inst.truth, thr);
      const double ar = average_recall(inst.proposals, inst.truth, 5, std::vector<double>{thr});
      CHECK(ap <= prev_ap);
      CHECK(ar <= prev_ar);
      CHECK(ap >= 0.0);
      CHECK(ap <= 100.0);
      prev_ap = ap;
      prev_ar = ar;
    }
    double prev = -1;
    for (std::size_t n = 1; n <= 11; ++n) {
      const double ar = average_recall(inst.proposals, inst.truth, n, std::vector<double>{0.5, 0.75});
      CHECK(ar >= prev);
      prev = ar;
    }
  }
}

TEST_CASE("NMS, AP and AR match brute-force oracles on 1000 instances") {
  const auto t = run_metric_oracles(2024, 1000);
  CHECK(t.cases == 1000);
  CHECK(t.nms_mismatch == 0);
  CHECK(t.ap_mismatch == 0);
  CHECK(t.ar_mismatch == 0);
}

TEST_CASE("Fisher score examples") {
  const std::vector<std::vector<double>> a{{0, 1}, {2, -1}}, b{{1, 2}, {1, -2}};
  CHECK(fisher_score(a, b) == 0.0);

  const std::vector<std::vector<double>> p{{0.0}, {0.0}}, q{{3.0}, {3.0}};
  CHECK(fisher_score(p, q) == doctest::Approx(9.0 / 2e-12));

  Rng rng(4);
  std::vector<std::vector<double>> x, y;
  for (int i = 0; i < 10000; ++i) {
    x.push_back({rng.normal()});
    y.push_back({2.0 + rng.normal()});
  }
  CHECK(std::abs(fisher_score(x, y) - 2.0) < 0.1);

  CHECK_THROWS_AS(fisher_score(std::vector<std::vector<double>>{{1.0}}, y), ContractError);
  CHECK_THROWS_AS(fisher_score(std::vector<std::vector<double>>{{1.0}, {1.0, 2.0}}, y), ContractError);
}

TEST_CASE("metric rows: oracle proposals, empty sets and averages") {
  EvalConfig cfg;
  const std::vector<ForgeryAnnotation> gt{truth_of("a", {{1, 5}}), truth_of("b", {{3, 4}}), truth_of("c", {{0, 9}})};
  std::vector<Proposal> perfect;
  for (const auto& a : gt) perfect.push_back({a.segments[0].interval, 1.0, a.video_id});
  const auto full = compute_metrics(perfect, gt, cfg);
  for (double v : full.ap) CHECK(v == 100.0);
  for (double v : full.ar) CHECK(v == 100.0);
  CHECK(full.ap_avg == 100.0);
  CHECK(full.ar_avg == 100.0);

  const auto none = compute_metrics({}, gt, cfg);
  for (double v : none.ap) CHECK(v == 0.0);
  for (double v : none.ar) CHECK(v == 0.0);

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = random_metric_instance(rng);
    if (gt_count(inst.truth) == 0) continue;
    const auto row = compute_metrics(inst.proposals, inst.truth, cfg);
    CHECK(row.ap_avg == doctest::Approx((row.ap[0] + row.ap[1] + row.ap[2]) / 3.0));
    CHECK(row.ar_avg == doctest::Approx((row.ar[0] + row.ar[1] + row.ar[2]) / 3.0));
  }
}

TEST_CASE("CSV layout") {
  CHECK(report_csv_header() == "protocol,ap75,ap85,ap95,ap_avg,ar1,ar5,ar10,ar_avg,fisher");
  EvalReport r;
  r.protocol = "intra";
  r.overall = {{90.0, 80.5, 12.346}, 60.94833, {50, 60, 70}, 60};
  r.fisher = 0.25;
  CHECK(report_csv_row(r) == "intra,90.00,80.50,12.35,60.95,50.00,60.00,70.00,60.00,0.25");
  r.fisher.reset();
  CHECK(report_csv_row(r) == "intra,90.00,80.50,12.35,60.95,50.00,60.00,70.00,60.00,");
}

TEST_CASE("eval config validation") {
  EvalConfig cfg;
  cfg.tiou_thresholds = {0.5, 0.75};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.recall_at = {1, 0, 10};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

} // TEST_SUITE
