// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace tadiff {

enum class Init { Zeros, Ones, Uniform, Constant };

/// Ordered table of named trainable tensors. Registration order defines the
/// checkpoint layout and optimizer order.
class ParameterStore {
public:
  /// Uniform init draws from U(-b, b), b = 1/sqrt(fan_in).
  Tensor add(const std::string& name, Shape shape, Init init, Rng& rng, std::size_t fan_in = 0,
             double value = 0.0);

  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;
  std::size_t total_size() const;

private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

} // namespace tadiff
