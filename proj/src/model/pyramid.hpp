// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "core/tensor.hpp"
#include "model/params.hpp"

namespace tadiff {

struct PyramidConfig {
  std::size_t input_dim = 32;
  std::size_t channels = 128;
  std::size_t levels = 6;
  std::size_t window = 9;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 2;
  std::size_t head_layers = 3;
  std::size_t head_kernel = 3;
  bool share_heads = true;
  /// Initial foreground probability encoded in the confidence bias.
  double prior_prob = 0.01;

  void validate() const;
};

struct LevelGeometry {
  std::size_t length; // N_l = ceil(T / stride)
  std::size_t stride;
};

/// Level lengths and strides for a sequence of `frames` frames. Throws
/// ConfigError when frames < 2^(levels-1).
std::vector<LevelGeometry> pyramid_geometry(std::size_t frames, std::size_t levels);

struct PyramidFeatures {
  std::vector<Tensor> levels;       // [N_l x C]
  std::vector<std::size_t> strides; // 1, 2, 4, ...
};

struct HeadOutputs {
  std::vector<Tensor> logits;  // [N_l x 1], raw confidence logits
  std::vector<Tensor> offsets; // [N_l x 2], (to start, to end) in stride units, >= 0
};

/// Input projection, then one local-attention transformer block per level
/// with a stride-2 depthwise downsampling between levels.
class PyramidEncoder {
public:
  PyramidEncoder(const PyramidConfig& cfg, ParameterStore& store, Rng& rng);

  PyramidFeatures operator()(const Tensor& frames) const;

  const PyramidConfig& config() const { return cfg_; }

private:
  struct Block {
    Tensor ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln2_g, ln2_b, w1, b1, w2, b2;
    Tensor out_g, out_b;
  };

  Tensor run_block(const Block& blk, const Tensor& x) const;

  PyramidConfig cfg_;
  Tensor proj_w_, proj_b_, proj_ln_g_, proj_ln_b_;
  std::vector<Tensor> down_w_, down_b_; // index l-1 for levels 2..L
  std::vector<Block> blocks_;
};

/// Conv stacks for confidence and boundary offsets, shared across levels
/// unless share_heads is false.
class DetectionHeads {
public:
  DetectionHeads(const PyramidConfig& cfg, ParameterStore& store, Rng& rng);

  HeadOutputs operator()(const std::vector<Tensor>& levels) const;

private:
  struct Stack {
    std::vector<Tensor> w, b;
  };

  static Tensor run_stack(const Stack& s, const Tensor& x, std::size_t kernel);

  PyramidConfig cfg_;
  std::vector<Stack> cls_, reg_; // one entry when shared
};

} // namespace tadiff
