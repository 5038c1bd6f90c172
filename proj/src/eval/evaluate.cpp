// SPDX-License-Identifier: Apache-2.0
#include "eval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "data/split.hpp"

namespace tadiff {

std::vector<Proposal> decode_proposals(const HeadOutputs& heads, std::span<const LevelGeometry> geometry,
                                       std::size_t frames, double fps, const std::string& video_id,
                                       const DecodeOptions& opts) {
  if (heads.logits.size() != geometry.size() || heads.offsets.size() != geometry.size()) {
    throw ShapeError("decode_proposals: head outputs do not match the pyramid geometry");
  }
  std::vector<Proposal> out;
  const double limit = static_cast<double>(frames);
  for (std::size_t l = 0; l < geometry.size(); ++l) {
    const double stride = static_cast<double>(geometry[l].stride);
    const auto logits = heads.logits[l].data();
    const auto offs = heads.offsets[l].data();
    for (std::size_t t = 0; t < logits.size(); ++t) {
      const double score = 1.0 / (1.0 + std::exp(-logits[t]));
      if (score < opts.score_threshold) continue;
      const double p = static_cast<double>(t) * stride;
      const double s = std::clamp(p - offs[2 * t] * stride, 0.0, limit);
      const double e = std::clamp(p + offs[2 * t + 1] * stride, 0.0, limit);
      if (!(e > s)) continue;
      out.push_back({{s / fps, e / fps}, score, video_id});
    }
  }
  std::stable_sort(out.begin(), out.end(), proposal_before);
  if (out.size() > opts.max_per_video) out.resize(opts.max_per_video);
  return out;
}

void EvalConfig::validate() const {
  if (tiou_thresholds.size() != 3) throw ConfigError("eval.tiou_thresholds must list exactly 3 thresholds");
  if (recall_at.size() != 3) throw ConfigError("eval.recall_at must list exactly 3 proposal counts");
  if (recall_tious.empty()) throw ConfigError("eval.recall_tious must not be empty");
  for (double t : tiou_thresholds)
    if (!(t >= 0 && t < 1)) throw ConfigError("eval.tiou_thresholds must lie in [0,1)");
  for (double t : recall_tious)
    if (!(t >= 0 && t < 1)) throw ConfigError("eval.recall_tious must lie in [0,1)");
  for (auto n : recall_at)
    if (n == 0) throw ConfigError("eval.recall_at entries must be positive");
  if (!(nms.iou_threshold >= 0 && nms.iou_threshold <= 1)) throw ConfigError("eval.nms_threshold must lie in [0,1]");
  if (!(nms.soft_sigma > 0)) throw ConfigError("eval.soft_nms_sigma must be positive");
  if (!(decode.score_threshold >= 0 && decode.score_threshold < 1)) throw ConfigError("eval.score_threshold must lie in [0,1)");
  if (decode.max_per_video == 0) throw ConfigError("eval.max_per_video must be positive");
}

MetricRow compute_metrics(std::span<const Proposal> proposals, std::span<const ForgeryAnnotation> truth,
                          const EvalConfig& cfg) {
  MetricRow row;
  for (double t : cfg.tiou_thresholds) row.ap.push_back(average_precision(proposals, truth, t));
  for (auto n : cfg.recall_at) row.ar.push_back(average_recall(proposals, truth, n, cfg.recall_tious));
  const auto avg = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  row.ap_avg = avg(row.ap);
  row.ar_avg = avg(row.ar);
  return row;
}

std::vector<Proposal> predict_video(const Localizer& model, const Tensor& frames, double fps,
                                    const std::string& video_id, const EvalConfig& cfg) {
  NoGradGuard guard;
  const auto geometry = pyramid_geometry(frames.rows(), model.config().pyramid.levels);
  const auto fwd = model.forward(frames, Phase::Eval, derive_seed(cfg.noise_seed, "eval", video_id));
  auto proposals = decode_proposals(fwd.heads, geometry, frames.rows(), fps, video_id, cfg.decode);
  return nms(std::move(proposals), cfg.nms);
}

namespace {

void collect_rows(const Tensor& level, std::size_t stride, std::span<const std::pair<double, double>> segs,
                  std::vector<std::vector<double>>& inside, std::vector<std::vector<double>>& outside) {
  const std::size_t c = level.cols();
  const auto d = level.data();
  for (std::size_t t = 0; t < level.rows(); ++t) {
    const double p = static_cast<double>(t * stride);
    const bool forged = std::any_of(segs.begin(), segs.end(), [p](const auto& s) { return p >= s.first && p < s.second; });
    std::vector<double> row(d.begin() + static_cast<std::ptrdiff_t>(t * c), d.begin() + static_cast<std::ptrdiff_t>((t + 1) * c));
    (forged ? inside : outside).push_back(std::move(row));
  }
}

} // namespace

EvalReport evaluate_model(const Localizer& model, const Manifest& test, const std::string& protocol,
                          const EvalConfig& cfg) {
  cfg.validate();
  NoGradGuard guard;
  EvalReport rep;
  rep.protocol = protocol;
  rep.videos = test.videos.size();

  std::vector<Proposal> all;
  std::vector<ForgeryAnnotation> truth;
  std::map<std::string, std::vector<Proposal>> dom_props;
  std::map<std::string, std::vector<ForgeryAnnotation>> dom_truth;
  std::vector<std::vector<double>> pre_in, pre_out, post_in, post_out;

  for (const auto& v : test.videos) {
    const auto seq = load_video(test, v);
    if (seq.features.cols() != model.config().pyramid.input_dim) {
      throw DataError("video " + v.id + ": feature dim " + std::to_string(seq.features.cols()) +
                      " does not match the model");
    }
    const auto geometry = pyramid_geometry(seq.frames(), model.config().pyramid.levels);
    const auto fwd = model.forward(seq.features, Phase::Eval, derive_seed(cfg.noise_seed, "eval", v.id));
    auto props = nms(decode_proposals(fwd.heads, geometry, seq.frames(), v.fps, v.id, cfg.decode), cfg.nms);

    const auto ann = v.annotation();
    const auto dom = video_domain(v);
    const std::string key = dom ? std::string(domain_name(*dom)) : std::string("real");
    dom_props[key].insert(dom_props[key].end(), props.begin(), props.end());
    dom_truth[key].push_back(ann);
    all.insert(all.end(), props.begin(), props.end());
    truth.push_back(ann);
    rep.segments += ann.segments.size();

    if (cfg.fisher) {
      std::vector<std::pair<double, double>> segs;
      for (const auto& s : ann.segments) segs.emplace_back(s.interval.start_sec * v.fps, s.interval.end_sec * v.fps);
      for (std::size_t l = 0; l < geometry.size(); ++l) {
        collect_rows(fwd.pyramid.levels[l], geometry[l].stride, segs, pre_in, pre_out);
        collect_rows(fwd.refined[l], geometry[l].stride, segs, post_in, post_out);
      }
    }
  }
  if (rep.segments == 0) throw DataError("evaluation set for protocol " + protocol + " has no manipulated segments");

  rep.overall = compute_metrics(all, truth, cfg);
  for (const auto& [key, anns] : dom_truth) {
    std::size_t n = 0;
    for (const auto& a : anns) n += a.segments.size();
    if (n == 0) continue;
    rep.per_domain[key] = compute_metrics(dom_props[key], anns, cfg);
  }
  if (cfg.fisher && pre_in.size() >= 2 && pre_out.size() >= 2) {
    rep.fisher_before = fisher_score(pre_in, pre_out);
    rep.fisher = fisher_score(post_in, post_out);
  }
  return rep;
}

std::string report_csv_header() { return "protocol,ap75,ap85,ap95,ap_avg,ar1,ar5,ar10,ar_avg,fisher"; }

std::string report_csv_row(const EvalReport& r) {
  std::string out = r.protocol;
  char buf[64];
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.2f", v);
    out += buf;
  };
  for (double v : r.overall.ap) put(v);
  put(r.overall.ap_avg);
  for (double v : r.overall.ar) put(v);
  put(r.overall.ar_avg);
  if (r.fisher) {
    put(*r.fisher);
  } else {
    out += ",";
  }
  return out;
}

std::string report_json(const EvalReport& r) {
  using ojson = nlohmann::ordered_json;
  const auto row = [](const MetricRow& m) {
    return ojson{{"ap", m.ap}, {"ap_avg", m.ap_avg}, {"ar", m.ar}, {"ar_avg", m.ar_avg}};
  };
  ojson j;
  j["protocol"] = r.protocol;
  j["videos"] = r.videos;
  j["segments"] = r.segments;
  j["overall"] = row(r.overall);
  ojson dom = ojson::object();
  for (const auto& [k, m] : r.per_domain) dom[k] = row(m);
  j["per_domain"] = std::move(dom);
  j["fisher_before"] = r.fisher_before ? ojson(*r.fisher_before) : ojson(nullptr);
  j["fisher"] = r.fisher ? ojson(*r.fisher) : ojson(nullptr);
  return j.dump(2) + "\n";
}

} // namespace tadiff
