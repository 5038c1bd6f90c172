// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "core/annotation.hpp"
#include "data/features.hpp"
#include "data/manifest.hpp"

namespace tadiff {

/// Feature-level artifact model of one manipulation method. Directions are
/// derived from (dataset seed, name), so distinct names give distinct
/// directions.
struct MechanismSignature {
  std::string name;
  Domain domain = Domain::A;
  double shift = 1.0;            // displacement along the shift direction inside the segment
  double noise_amp = 0.5;        // amplitude of the periodic component
  std::size_t noise_period = 2;  // frames
  double jump = 2.0;             // spike at the first and last forged frame
};

std::vector<MechanismSignature> default_mechanisms();

struct SyntheticConfig {
  std::size_t num_videos = 400;            // videos manipulated by A/B methods
  std::size_t num_open_world_videos = 100; // videos manipulated by open-world methods
  std::size_t t_min = 128;
  std::size_t t_max = 512;
  std::size_t input_dim = 32;
  double fps = 8.0;
  std::size_t max_segments = 2;
  double two_segment_prob = 0.4;
  // Segment duration / video duration ~ Beta(ratio_alpha, ratio_beta), capped at max_ratio.
  double ratio_alpha = 1.5;
  double ratio_beta = 5.0;
  double max_ratio = 0.6;
  std::size_t min_segment_frames = 8;
  std::size_t min_gap_frames = 4;
  // Authentic stream: leaky walk over moving-averaged Gaussian increments.
  std::size_t walk_smooth = 5;
  double walk_decay = 0.97;
  double content_scale = 0.5;      // per-video constant offset ("what happens in the scene")
  double semantic_change = 0.25;   // per-segment content change inside forged spans
  double observation_noise = 0.2;
  double real_fraction = 0.0;      // share of untouched videos among the A/B pool
  // Artifact directions mix a dataset-wide component (weight sqrt(shared_fraction))
  // with a per-mechanism one, so unseen mechanisms resemble known ones.
  double shared_fraction = 0.5;
  double direction_jitter = 0.3;   // per-video perturbation of the directions
  std::vector<MechanismSignature> mechanisms = default_mechanisms();
  std::uint64_t seed = 0;

  void validate() const;
};

struct MechanismDirections {
  std::vector<double> shift, noise, jump; // unit vectors
};

MechanismDirections mechanism_directions(const MechanismSignature& m, std::size_t dim, std::uint64_t seed,
                                         double shared_fraction = 0.0);

struct GeneratedVideo {
  VideoRecord record;
  FeatureMatrix features;
};

/// Pure function of (cfg, index); videos [0, num_videos) use A/B methods
/// round-robin, the rest use open-world methods.
GeneratedVideo generate_video(const SyntheticConfig& cfg, std::size_t index);

/// Writes features/<id>.afft and manifest.json under out_dir.
Manifest generate_dataset(const SyntheticConfig& cfg, const std::filesystem::path& out_dir);

struct DatasetSummary {
  std::size_t videos = 0;
  std::size_t real_videos = 0;
  std::map<std::string, std::size_t> segments_per_method;
  std::map<std::string, std::size_t> videos_per_domain;
};

DatasetSummary summarize(const Manifest& m);

} // namespace tadiff
