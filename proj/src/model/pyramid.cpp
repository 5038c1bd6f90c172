// SPDX-License-Identifier: Apache-2.0
#include "model/pyramid.hpp"

#include <cmath>

namespace tadiff {

void PyramidConfig::validate() const {
  if (input_dim == 0 || channels == 0) throw ConfigError("model: input_dim and channels must be positive");
  if (levels == 0) throw ConfigError("model: levels must be >= 1");
  if (window % 2 == 0) throw ConfigError("model: window must be odd, got " + std::to_string(window));
  if (heads == 0 || channels % heads != 0) {
    throw ConfigError("model: channels (" + std::to_string(channels) + ") must be divisible by heads (" +
                      std::to_string(heads) + ")");
  }
  if (mlp_ratio == 0) throw ConfigError("model: mlp_ratio must be >= 1");
  if (head_layers < 1) throw ConfigError("model: head_layers must be >= 1");
  if (head_kernel % 2 == 0) throw ConfigError("model: head_kernel must be odd");
  if (!(prior_prob > 0 && prior_prob < 1)) throw ConfigError("model: prior_prob must be in (0,1)");
}

std::vector<LevelGeometry> pyramid_geometry(std::size_t frames, std::size_t levels) {
  if (levels == 0) throw ConfigError("pyramid: at least one level required");
  const std::size_t min_frames = std::size_t{1} << (levels - 1);
  if (frames < min_frames) {
    throw ConfigError("pyramid: " + std::to_string(frames) + " frames is too short for " +
                      std::to_string(levels) + " levels (need >= " + std::to_string(min_frames) + ")");
  }
  std::vector<LevelGeometry> out;
  out.reserve(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t stride = std::size_t{1} << l;
    out.push_back({(frames + stride - 1) / stride, stride});
  }
  return out;
}

PyramidEncoder::PyramidEncoder(const PyramidConfig& cfg, ParameterStore& store, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t c = cfg_.channels, cin = cfg_.input_dim, hidden = c * cfg_.mlp_ratio;
  proj_w_ = store.add("encoder.proj.w", {3, cin, c}, Init::Uniform, rng, 3 * cin);
  proj_b_ = store.add("encoder.proj.b", {c}, Init::Zeros, rng);
  proj_ln_g_ = store.add("encoder.proj.ln.g", {c}, Init::Ones, rng);
  proj_ln_b_ = store.add("encoder.proj.ln.b", {c}, Init::Zeros, rng);
  for (std::size_t l = 0; l < cfg_.levels; ++l) {
    const std::string p = "encoder.level" + std::to_string(l) + ".";
    if (l > 0) {
      down_w_.push_back(store.add(p + "down.w", {3, c}, Init::Uniform, rng, 3));
      down_b_.push_back(store.add(p + "down.b", {c}, Init::Zeros, rng));
    }
    Block b;
    b.ln1_g = store.add(p + "ln1.g", {c}, Init::Ones, rng);
    b.ln1_b = store.add(p + "ln1.b", {c}, Init::Zeros, rng);
    b.wq = store.add(p + "attn.wq", {c, c}, Init::Uniform, rng, c);
    b.bq = store.add(p + "attn.bq", {c}, Init::Zeros, rng);
    b.wk = store.add(p + "attn.wk", {c, c}, Init::Uniform, rng, c);
    b.bk = store.add(p + "attn.bk", {c}, Init::Zeros, rng);
    b.wv = store.add(p + "attn.wv", {c, c}, Init::Uniform, rng, c);
    b.bv = store.add(p + "attn.bv", {c}, Init::Zeros, rng);
    b.wo = store.add(p + "attn.wo", {c, c}, Init::Uniform, rng, c);
    b.bo = store.add(p + "attn.bo", {c}, Init::Zeros, rng);
    b.ln2_g = store.add(p + "ln2.g", {c}, Init::Ones, rng);
    b.ln2_b = store.add(p + "ln2.b", {c}, Init::Zeros, rng);
    b.w1 = store.add(p + "mlp.w1", {c, hidden}, Init::Uniform, rng, c);
    b.b1 = store.add(p + "mlp.b1", {hidden}, Init::Zeros, rng);
    b.w2 = store.add(p + "mlp.w2", {hidden, c}, Init::Uniform, rng, hidden);
    b.b2 = store.add(p + "mlp.b2", {c}, Init::Zeros, rng);
    b.out_g = store.add(p + "out.ln.g", {c}, Init::Ones, rng);
    b.out_b = store.add(p + "out.ln.b", {c}, Init::Zeros, rng);
    blocks_.push_back(std::move(b));
  }
}

Tensor PyramidEncoder::run_block(const Block& blk, const Tensor& x) const {
  const Tensor h = layer_norm(x, blk.ln1_g, blk.ln1_b);
  const Tensor q = add_row(matmul(h, blk.wq), blk.bq);
  const Tensor k = add_row(matmul(h, blk.wk), blk.bk);
  const Tensor v = add_row(matmul(h, blk.wv), blk.bv);
  const Tensor attn = local_attention(q, k, v, cfg_.window, cfg_.heads);
  const Tensor x1 = x + add_row(matmul(attn, blk.wo), blk.bo);
  const Tensor h2 = layer_norm(x1, blk.ln2_g, blk.ln2_b);
  const Tensor mlp = add_row(matmul(relu(add_row(matmul(h2, blk.w1), blk.b1)), blk.w2), blk.b2);
  return x1 + mlp;
}

PyramidFeatures PyramidEncoder::operator()(const Tensor& frames) const {
  if (frames.rank() != 2 || frames.dim(1) != cfg_.input_dim) {
    throw ShapeError("pyramid: expected [T x " + std::to_string(cfg_.input_dim) + "] input, got " +
                     shape_str(frames.shape()));
  }
  const auto geometry = pyramid_geometry(frames.dim(0), cfg_.levels);

  PyramidFeatures out;
  Tensor x = relu(layer_norm(add_row(conv1d(frames, proj_w_, 1, 1), proj_b_), proj_ln_g_, proj_ln_b_));
  for (std::size_t l = 0; l < cfg_.levels; ++l) {
    if (l > 0) x = add_row(depthwise_conv1d(x, down_w_[l - 1], 2, 1), down_b_[l - 1]);
    x = run_block(blocks_[l], x);
    out.levels.push_back(layer_norm(x, blocks_[l].out_g, blocks_[l].out_b));
    out.strides.push_back(geometry[l].stride);
  }
  return out;
}

DetectionHeads::DetectionHeads(const PyramidConfig& cfg, ParameterStore& store, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t c = cfg_.channels, k = cfg_.head_kernel;
  const double prior_bias = -std::log((1.0 - cfg_.prior_prob) / cfg_.prior_prob);
  const std::size_t copies = cfg_.share_heads ? 1 : cfg_.levels;
  for (std::size_t i = 0; i < copies; ++i) {
    const std::string p = cfg_.share_heads ? "heads." : "heads.level" + std::to_string(i) + ".";
    Stack cls, reg;
    for (std::size_t layer = 0; layer < cfg_.head_layers; ++layer) {
      const bool last = layer + 1 == cfg_.head_layers;
      const std::string idx = std::to_string(layer);
      cls.w.push_back(store.add(p + "cls." + idx + ".w", {k, c, last ? 1 : c}, Init::Uniform, rng, k * c));
      cls.b.push_back(store.add(p + "cls." + idx + ".b", {last ? std::size_t{1} : c}, last ? Init::Constant : Init::Zeros,
                                rng, 0, prior_bias));
      reg.w.push_back(store.add(p + "reg." + idx + ".w", {k, c, last ? 2 : c}, Init::Uniform, rng, k * c));
      reg.b.push_back(store.add(p + "reg." + idx + ".b", {last ? std::size_t{2} : c}, Init::Zeros, rng));
    }
    cls_.push_back(std::move(cls));
    reg_.push_back(std::move(reg));
  }
}

Tensor DetectionHeads::run_stack(const Stack& s, const Tensor& x, std::size_t kernel) {
  Tensor h = x;
  for (std::size_t i = 0; i < s.w.size(); ++i) {
    h = add_row(conv1d(h, s.w[i], 1, kernel / 2), s.b[i]);
    if (i + 1 < s.w.size()) h = relu(h);
  }
  return h;
}

HeadOutputs DetectionHeads::operator()(const std::vector<Tensor>& levels) const {
  HeadOutputs out;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const std::size_t i = cfg_.share_heads ? 0 : l;
    out.logits.push_back(run_stack(cls_.at(i), levels[l], cfg_.head_kernel));
    out.offsets.push_back(softplus(run_stack(reg_.at(i), levels[l], cfg_.head_kernel)));
  }
  return out;
}

} // namespace tadiff
