// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <system_error>

#include <unistd.h>

#include "pipeline/config.hpp"

namespace tadiff::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tadiff_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Seconds-scale configuration: 24 A/B videos plus 8 open-world ones of
/// 64-96 frames, an 8-dim input and a 4-level, 16-channel model.
inline RunConfig tiny_config(const std::filesystem::path& root, std::uint64_t seed = 0) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.output = root / "run";
  cfg.data.dir = root / "data";
  auto& syn = cfg.data.synthetic;
  syn.num_videos = 24;
  syn.num_open_world_videos = 8;
  syn.t_min = 64;
  syn.t_max = 96;
  syn.input_dim = 8;
  auto& p = cfg.model.pyramid;
  p.input_dim = 8;
  p.channels = 16;
  p.levels = 4;
  p.window = 3;
  p.heads = 2;
  p.head_layers = 2;
  cfg.model.diffusion.steps = 2;
  cfg.model.diffusion.embed_dim = 8;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 4;
  cfg.train.warmup_epochs = 1;
  cfg.ablate.seeds = {0, 1};
  cfg.resolve();
  return cfg;
}

} // namespace tadiff::testing
