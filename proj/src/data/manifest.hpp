// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/annotation.hpp"
#include "data/features.hpp"

namespace tadiff {

struct VideoRecord {
  std::string id;
  double duration_sec = 0.0;
  double fps = 0.0;
  std::string feature_file; // relative to the manifest directory
  bool fake = true;
  std::vector<ForgerySegment> segments;

  ForgeryAnnotation annotation() const;
};

/// Dataset index:
///   {"videos":[{"id","duration_sec","fps","feature_file","label":"real|fake",
///               "segments":[{"start_sec","end_sec","method","domain"}]}]}
struct Manifest {
  std::vector<VideoRecord> videos;
  std::filesystem::path base_dir; // where feature_file paths resolve

  std::filesystem::path feature_path(const VideoRecord& v) const { return base_dir / v.feature_file; }
};

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir);

void save_manifest(const Manifest& m, const std::filesystem::path& path);
/// Parses and validates every annotation. Feature files are not opened.
Manifest load_manifest(const std::filesystem::path& path);

/// Reads a video's feature file and checks it against the record.
FrameFeatureSequence load_video(const Manifest& m, const VideoRecord& v);

} // namespace tadiff
