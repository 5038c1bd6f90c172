// SPDX-License-Identifier: Apache-2.0
#include "data/features.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace tadiff {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

} // namespace

std::vector<std::uint8_t> encode_features(const FeatureMatrix& m) {
  if (static_cast<std::size_t>(m.frames) * m.channels != m.values.size()) {
    throw DataError("feature matrix: " + std::to_string(m.values.size()) + " values for " +
                    std::to_string(m.frames) + "x" + std::to_string(m.channels));
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFeatureHeaderBytes + 4 * m.values.size());
  out.insert(out.end(), std::begin(kFeatureMagic), std::end(kFeatureMagic));
  put_u16(out, kFeatureVersion);
  put_u32(out, m.frames);
  put_u32(out, m.channels);
  for (float v : m.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FeatureMatrix decode_features(std::span<const std::uint8_t> b) {
  if (b.size() < 4) throw DataError("feature file truncated at byte offset " + std::to_string(b.size()) + ": missing magic");
  if (std::memcmp(b.data(), kFeatureMagic, 4) != 0) throw DataError("feature file: bad magic at byte offset 0");
  if (b.size() < 6) throw DataError("feature file truncated at byte offset " + std::to_string(b.size()) + ": missing version");
  const auto version = static_cast<std::uint16_t>(b[4] | (b[5] << 8));
  if (version != kFeatureVersion) {
    throw DataError("feature file: unsupported version " + std::to_string(version) + " at byte offset 4");
  }
  if (b.size() < kFeatureHeaderBytes) {
    throw DataError("feature file truncated at byte offset " + std::to_string(b.size()) + ": header needs " +
                    std::to_string(kFeatureHeaderBytes) + " bytes");
  }
  FeatureMatrix m;
  m.frames = get_u32(b, 6);
  m.channels = get_u32(b, 10);
  const std::size_t count = static_cast<std::size_t>(m.frames) * m.channels;
  const std::size_t expected = kFeatureHeaderBytes + 4 * count;
  if (b.size() < expected) {
    throw DataError("feature file truncated at byte offset " + std::to_string(b.size()) + ": payload for " +
                    std::to_string(m.frames) + "x" + std::to_string(m.channels) + " needs " +
                    std::to_string(expected) + " bytes");
  }
  if (b.size() > expected) {
    throw DataError("feature file: " + std::to_string(b.size() - expected) + " trailing bytes at byte offset " +
                    std::to_string(expected));
  }
  m.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) m.values[i] = std::bit_cast<float>(get_u32(b, kFeatureHeaderBytes + 4 * i));
  return m;
}

void write_features(const std::filesystem::path& path, const FeatureMatrix& m) {
  const auto bytes = encode_features(m);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("failed writing " + path.string());
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open feature file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return decode_features(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

FrameFeatureSequence make_sequence(std::string video_id, const FeatureMatrix& m, double fps, double duration_sec) {
  if (m.frames < 8) throw DataError("video " + video_id + ": " + std::to_string(m.frames) + " frames, need >= 8");
  if (!(fps > 0)) throw DataError("video " + video_id + ": fps must be positive");
  if (std::abs(duration_sec - m.frames / fps) > 1.0 / fps) {
    throw DataError("video " + video_id + ": duration " + std::to_string(duration_sec) + "s disagrees with " +
                    std::to_string(m.frames) + " frames at " + std::to_string(fps) + " fps");
  }
  std::vector<double> values(m.values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(m.values[i])) {
      throw DataError("video " + video_id + ": non-finite feature at frame " + std::to_string(i / m.channels));
    }
    values[i] = m.values[i];
  }
  FrameFeatureSequence seq;
  seq.video_id = std::move(video_id);
  seq.features = Tensor::from({m.frames, m.channels}, std::move(values));
  seq.fps = fps;
  seq.duration_sec = duration_sec;
  return seq;
}

} // namespace tadiff
