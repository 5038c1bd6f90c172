// SPDX-License-Identifier: Apache-2.0
#include "data/manifest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tadiff {

using ojson = nlohmann::ordered_json;

ForgeryAnnotation VideoRecord::annotation() const {
  ForgeryAnnotation a;
  a.video_id = id;
  a.duration_sec = duration_sec;
  a.segments = segments;
  return a;
}

std::string manifest_to_json(const Manifest& m) {
  ojson videos = ojson::array();
  for (const auto& v : m.videos) {
    ojson segs = ojson::array();
    for (const auto& s : v.segments) {
      segs.push_back({{"start_sec", s.interval.start_sec},
                      {"end_sec", s.interval.end_sec},
                      {"method", s.method},
                      {"domain", std::string(domain_name(s.domain))}});
    }
    videos.push_back({{"id", v.id},
                      {"duration_sec", v.duration_sec},
                      {"fps", v.fps},
                      {"feature_file", v.feature_file},
                      {"label", v.fake ? "fake" : "real"},
                      {"segments", std::move(segs)}});
  }
  ojson root = {{"videos", std::move(videos)}};
  return root.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  ojson root;
  try {
    root = ojson::parse(text);
  } catch (const std::exception& e) {
    throw DataError(std::string("manifest: invalid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("videos") || !root["videos"].is_array()) {
    throw DataError("manifest: expected an object with a \"videos\" array");
  }
  Manifest m;
  m.base_dir = base_dir;
  std::size_t index = 0;
  for (const auto& jv : root["videos"]) {
    const std::string where = "manifest: video #" + std::to_string(index++);
    try {
      VideoRecord v;
      v.id = jv.at("id").get<std::string>();
      v.duration_sec = jv.at("duration_sec").get<double>();
      v.fps = jv.at("fps").get<double>();
      v.feature_file = jv.at("feature_file").get<std::string>();
      const auto label = jv.at("label").get<std::string>();
      if (label != "real" && label != "fake") throw DataError("label must be real or fake, got " + label);
      v.fake = label == "fake";
      for (const auto& js : jv.at("segments")) {
        ForgerySegment s;
        s.interval.start_sec = js.at("start_sec").get<double>();
        s.interval.end_sec = js.at("end_sec").get<double>();
        s.method = js.at("method").get<std::string>();
        s.domain = parse_domain(js.at("domain").get<std::string>());
        v.segments.push_back(std::move(s));
      }
      if (v.fake && v.segments.empty()) throw DataError("fake video without segments");
      if (!v.fake && !v.segments.empty()) throw DataError("real video with segments");
      v.annotation().validate();
      m.videos.push_back(std::move(v));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return m;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write manifest " + path.string());
  os << manifest_to_json(m);
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return manifest_from_json(ss.str(), path.parent_path());
}

FrameFeatureSequence load_video(const Manifest& m, const VideoRecord& v) {
  return make_sequence(v.id, load_features(m.feature_path(v)), v.fps, v.duration_sec);
}

} // namespace tadiff
