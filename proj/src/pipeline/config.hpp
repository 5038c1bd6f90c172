// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "data/split.hpp"
#include "data/synthetic.hpp"
#include "eval/evaluate.hpp"
#include "model/localizer.hpp"
#include "train/trainer.hpp"

namespace tadiff {

struct DataSection {
  std::filesystem::path dir = "data"; // holds manifest.json and features/
  double train_fraction = 0.75;       // intra split and real videos
  SyntheticConfig synthetic;
};

struct AblateSection {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4}; // training seeds; the dataset stays fixed
  std::vector<std::string> protocols{"open-world"};
  std::string sweep_protocol = "intra";
};

/// Every experiment is a pure function of this struct. `seed` is the master
/// seed: it fixes the dataset, the split, and the default training seed.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output = "runs/default";
  std::string protocol = "intra";
  DataSection data;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  AblateSection ablate;

  /// Pushes the master seed into the sections that consume it.
  void resolve();
  void validate() const;
};

/// Missing keys keep their defaults; unknown keys and wrongly typed values
/// throw ConfigError naming the dotted key path.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully resolved config, keys in a fixed order, 2-space indent.
std::string run_config_to_json(const RunConfig& cfg);

/// Only the parts that determine a trained model (model, train, data,
/// protocol); stored in checkpoints.
std::string training_identity_json(const RunConfig& cfg);

std::string sha256_hex(std::string_view bytes);

} // namespace tadiff
