// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "data/manifest.hpp"
#include "eval/metrics.hpp"
#include "model/localizer.hpp"

namespace tadiff {

struct DecodeOptions {
  double score_threshold = 0.001;
  std::size_t max_per_video = 100;
};

/// Location t at level l with offsets (d_s, d_e) covers frames
/// [(t - d_s) * stride, (t + d_e) * stride] clipped to [0, frames], then
/// converted to seconds. Zero-length intervals and low scores are dropped;
/// the best max_per_video survive.
std::vector<Proposal> decode_proposals(const HeadOutputs& heads, std::span<const LevelGeometry> geometry,
                                       std::size_t frames, double fps, const std::string& video_id,
                                       const DecodeOptions& opts);

struct EvalConfig {
  std::vector<double> tiou_thresholds{0.75, 0.85, 0.95};
  std::vector<std::size_t> recall_at{1, 5, 10};
  /// tIoU thresholds averaged inside AR@n.
  std::vector<double> recall_tious{0.75, 0.85, 0.95};
  DecodeOptions decode;
  NmsOptions nms;
  bool fisher = true;
  std::uint64_t noise_seed = 0;

  void validate() const;
};

struct MetricRow {
  std::vector<double> ap; // per tIoU threshold
  double ap_avg = 0.0;
  std::vector<double> ar; // per n
  double ar_avg = 0.0;
};

struct EvalReport {
  std::string protocol;
  std::size_t videos = 0;
  std::size_t segments = 0;
  MetricRow overall;
  std::map<std::string, MetricRow> per_domain;
  std::optional<double> fisher_before; // encoder features
  std::optional<double> fisher;        // features fed to the heads
};

MetricRow compute_metrics(std::span<const Proposal> proposals, std::span<const ForgeryAnnotation> truth,
                          const EvalConfig& cfg);

/// Decode and NMS for one video.
std::vector<Proposal> predict_video(const Localizer& model, const Tensor& frames, double fps,
                                    const std::string& video_id, const EvalConfig& cfg);

/// Runs the model over every test video. Throws DataError when the test set
/// has no manipulated segment.
EvalReport evaluate_model(const Localizer& model, const Manifest& test, const std::string& protocol,
                          const EvalConfig& cfg);

/// `protocol,ap75,ap85,ap95,ap_avg,ar1,ar5,ar10,ar_avg,fisher`
std::string report_csv_header();
std::string report_csv_row(const EvalReport& r);
std::string report_json(const EvalReport& r);

} // namespace tadiff
