// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace tadiff {

/// Binary frame-feature file:
///
///   offset 0   magic "AFFT"
///   offset 4   version  u16 LE (currently 1)
///   offset 6   T        u32 LE (frames)
///   offset 10  C        u32 LE (channels)
///   offset 14  T*C f32 LE values, row-major
inline constexpr char kFeatureMagic[4] = {'A', 'F', 'F', 'T'};
inline constexpr std::uint16_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 14;

struct FeatureMatrix {
  std::uint32_t frames = 0;
  std::uint32_t channels = 0;
  std::vector<float> values; // frames * channels
};

std::vector<std::uint8_t> encode_features(const FeatureMatrix& m);
FeatureMatrix decode_features(std::span<const std::uint8_t> bytes);

void write_features(const std::filesystem::path& path, const FeatureMatrix& m);
/// Throws DataError naming the byte offset of the first problem.
FeatureMatrix load_features(const std::filesystem::path& path);

struct FrameFeatureSequence {
  std::string video_id;
  Tensor features; // [T x C_in]
  double fps = 0.0;
  double duration_sec = 0.0;

  std::size_t frames() const { return features.dim(0); }
};

/// Wraps a decoded matrix, checking T >= 8, finite values and that the
/// duration matches T / fps within one frame period.
FrameFeatureSequence make_sequence(std::string video_id, const FeatureMatrix& m, double fps, double duration_sec);

} // namespace tadiff
