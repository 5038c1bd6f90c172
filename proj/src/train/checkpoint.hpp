// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/tensor.hpp"
#include "model/params.hpp"

namespace tadiff {

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct OptimizerState {
  std::int64_t step = 0;
  std::vector<std::vector<double>> m, v; // parameter order
};

/// Binary layout, all integers and floats little-endian:
///   "TDCK" | u16 version | u64 n + n bytes config JSON | u64 epochs done |
///   u32 count | count x (u32 n + name | u32 rank | rank x u64 dim | f64 values) |
///   u8 has optimizer | [i64 step | per parameter: f64 m values, f64 v values]
struct Checkpoint {
  static constexpr std::uint16_t kVersion = 1;

  std::string config_json;
  std::uint64_t epochs_done = 0;
  std::vector<NamedTensor> params;
  std::optional<OptimizerState> optimizer;
};

std::string encode_checkpoint(const Checkpoint& ck);
/// Throws DataError naming the byte offset of the first problem.
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<NamedTensor> snapshot_parameters(const ParameterStore& store);
/// Copies values into the store. Throws DataError unless names and shapes
/// match the store exactly and in order.
void restore_parameters(ParameterStore& store, const std::vector<NamedTensor>& params);

} // namespace tadiff
