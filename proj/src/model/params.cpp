// SPDX-License-Identifier: Apache-2.0
#include "model/params.hpp"

#include <algorithm>
#include <cmath>

namespace tadiff {

Tensor ParameterStore::add(const std::string& name, Shape shape, Init init, Rng& rng,
                           std::size_t fan_in, double value) {
  if (contains(name)) throw ContractError("parameter registered twice: " + name);
  const std::size_t n = shape_numel(shape);
  std::vector<double> values(n, 0.0);
  switch (init) {
    case Init::Zeros:
      break;
    case Init::Ones:
      std::fill(values.begin(), values.end(), 1.0);
      break;
    case Init::Constant:
      std::fill(values.begin(), values.end(), value);
      break;
    case Init::Uniform: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
      for (auto& v : values) v = rng.uniform(-bound, bound);
      break;
    }
  }
  auto t = Tensor::from(std::move(shape), std::move(values), true);
  entries_.emplace_back(name, t);
  return t;
}

Tensor ParameterStore::get(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return t;
  throw ContractError("unknown parameter: " + name);
}

bool ParameterStore::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

std::vector<Tensor> ParameterStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.second);
  return out;
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.numel();
  return n;
}

} // namespace tadiff
