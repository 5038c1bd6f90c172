// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace tadiff {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Gradient destinations handed to a backward function, one per op input.
/// An entry is null when that input does not require a gradient.
using GradSinks = std::span<std::vector<double>* const>;

/// Accumulates input gradients given the gradient of the op output.
using BackwardFn = std::function<void(std::span<const double> grad_out, GradSinks inputs)>;

namespace detail {
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
};
} // namespace detail

/// Dense row-major f64 tensor handle. Copies share storage; values are
/// immutable once created except for parameter leaves and grad buffers.
class Tensor {
public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value);

  /// Records a new op on the tape. `backward` is only kept when some input
  /// requires a gradient and gradient recording is enabled.
  static Tensor make_op(Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs,
                        BackwardFn backward);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->data; }
  /// Writable view; reserved for parameter leaves (optimizer, init, loading).
  std::span<double> mutable_data() { return node_->data; }
  double item() const;
  double at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad();
  void zero_grad();

  /// Reverse-mode sweep from this scalar. Leaf gradients accumulate across
  /// calls; intermediate gradients are reset first.
  void backward() const;

  /// Same values, cut from the tape.
  Tensor detach() const;

private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

bool grad_enabled();

/// Disables tape recording on this thread for its lifetime.
class NoGradGuard {
public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
  bool previous_;
};

// Linear algebra and convolution.
Tensor matmul(const Tensor& a, const Tensor& b);
/// x: [T x C_in], kernel: [k x C_in x C_out]. Output [T' x C_out] with
/// T' = floor((T + 2*padding - k) / stride) + 1.
Tensor conv1d(const Tensor& x, const Tensor& kernel, std::size_t stride, std::size_t padding);
/// Per-channel convolution. x: [T x C], kernel: [k x C].
Tensor depthwise_conv1d(const Tensor& x, const Tensor& kernel, std::size_t stride,
                        std::size_t padding);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

/// Banded multi-head self-attention: location t attends to locations within
/// `window / 2` of itself. q, k, v: [N x C]; C divisible by `heads`.
Tensor local_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t window,
                       std::size_t heads);

// Elementwise.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor softmax_lastdim(const Tensor& x);

// Row-vector ops: `row` has numel equal to x's column count.
Tensor add_row(const Tensor& x, const Tensor& row);
Tensor mul_row(const Tensor& x, const Tensor& row);

// Reductions and slicing.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor take_row(const Tensor& x, std::size_t index);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(double s, const Tensor& x) { return scale(x, s); }

} // namespace tadiff
