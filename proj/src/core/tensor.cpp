// SPDX-License-Identifier: Apache-2.0
#include "core/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace tadiff {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMat = Eigen::Map<const RowMat>;
using MutMat = Eigen::Map<RowMat>;

thread_local bool g_grad_enabled = true;

ConstMat as_mat(std::span<const double> d, std::size_t r, std::size_t c) {
  return ConstMat(d.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

MutMat as_mat(std::vector<double>& d, std::size_t r, std::size_t c) {
  return MutMat(d.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (!x.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(x.shape()));
  }
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

template <typename F>
Tensor unary(const Tensor& x, F&& value_and_slope) {
  const auto in = x.data();
  std::vector<double> out(in.size());
  std::vector<double> slope(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    auto [v, s] = value_and_slope(in[i]);
    out[i] = v;
    slope[i] = s;
  }
  return Tensor::make_op(x.shape(), std::move(out), {x},
                         [slope = std::move(slope)](std::span<const double> g, GradSinks in) {
                           auto& gx = *in[0];
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * slope[i];
                         });
}

} // namespace

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("tensor: " + std::to_string(values.size()) + " values for shape " +
                     shape_str(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::make_op(Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs,
                       BackwardFn backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  if (g_grad_enabled &&
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); })) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& t : inputs) node->inputs.push_back(t.node_);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

std::size_t Tensor::rows() const { return rank() == 2 ? dim(0) : 1; }

std::size_t Tensor::cols() const { return rank() == 2 ? dim(1) : numel(); }

double Tensor::item() const {
  if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

std::span<double> Tensor::mutable_grad() {
  if (node_->grad.size() != node_->data.size()) node_->grad.assign(node_->data.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from(shape(), node_->data, false); }

void Tensor::backward() const {
  if (!node_ || numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        (node_ ? shape_str(shape()) : std::string("<undefined>")));
  }
  if (!node_->requires_grad) throw ContractError("backward: loss is not connected to any parameter");

  // Iterative post-order DFS, inputs visited in declaration order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      detail::Node* child = n->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (auto* n : order) {
    if (n->backward) n->grad.assign(n->data.size(), 0.0);
  }
  if (node_->grad.size() != 1) node_->grad.assign(1, 0.0);
  node_->grad[0] += 1.0;

  std::vector<std::vector<double>*> sinks;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (!n->backward) continue;
    sinks.clear();
    for (auto& in : n->inputs) {
      if (in->requires_grad) {
        if (in->grad.size() != in->data.size()) in->grad.assign(in->data.size(), 0.0);
        sinks.push_back(&in->grad);
      } else {
        sinks.push_back(nullptr);
      }
    }
    n->backward(n->grad, sinks);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  std::vector<double> out(m * n);
  as_mat(out, m, n).noalias() = as_mat(a.data(), m, k) * as_mat(b.data(), k, n);
  return Tensor::make_op({m, n}, std::move(out), {a, b},
                         [a, b, m, k, n](std::span<const double> g, GradSinks in) {
                           auto gm = as_mat(g, m, n);
                           if (in[0]) as_mat(*in[0], m, k).noalias() += gm * as_mat(b.data(), k, n).transpose();
                           if (in[1]) as_mat(*in[1], k, n).noalias() += as_mat(a.data(), m, k).transpose() * gm;
                         });
}

Tensor conv1d(const Tensor& x, const Tensor& kernel, std::size_t stride, std::size_t padding) {
  require_rank(x, 2, "conv1d");
  require_rank(kernel, 3, "conv1d");
  const std::size_t t_in = x.dim(0), c_in = x.dim(1);
  const std::size_t k = kernel.dim(0), c_out = kernel.dim(2);
  if (kernel.dim(1) != c_in) {
    throw ShapeError("conv1d: kernel " + shape_str(kernel.shape()) + " does not match input " +
                     shape_str(x.shape()));
  }
  if (k % 2 == 0) throw ShapeError("conv1d: kernel size must be odd, got " + std::to_string(k));
  if (stride == 0) throw ShapeError("conv1d: stride must be >= 1");
  if (k > t_in + 2 * padding) {
    throw ShapeError("conv1d: invalid geometry, kernel " + std::to_string(k) +
                     " exceeds padded length " + std::to_string(t_in + 2 * padding));
  }
  const std::size_t t_out = (t_in + 2 * padding - k) / stride + 1;
  const std::size_t width = k * c_in;

  auto cols = std::make_shared<std::vector<double>>(t_out * width, 0.0);
  const auto xd = x.data();
  for (std::size_t t = 0; t < t_out; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto src = static_cast<std::ptrdiff_t>(t * stride + j) - static_cast<std::ptrdiff_t>(padding);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_in)) continue;
      std::copy_n(xd.begin() + src * static_cast<std::ptrdiff_t>(c_in), c_in,
                  cols->begin() + static_cast<std::ptrdiff_t>(t * width + j * c_in));
    }
  }
  std::vector<double> out(t_out * c_out);
  as_mat(out, t_out, c_out).noalias() = as_mat(*cols, t_out, width) * as_mat(kernel.data(), width, c_out);

  return Tensor::make_op(
      {t_out, c_out}, std::move(out), {x, kernel},
      [cols, kernel, t_in, c_in, k, c_out, t_out, width, stride, padding](std::span<const double> g,
                                                                           GradSinks in) {
        auto gm = as_mat(g, t_out, c_out);
        if (in[1]) as_mat(*in[1], width, c_out).noalias() += as_mat(*cols, t_out, width).transpose() * gm;
        if (in[0]) {
          std::vector<double> gcols(t_out * width);
          as_mat(gcols, t_out, width).noalias() = gm * as_mat(kernel.data(), width, c_out).transpose();
          auto& gx = *in[0];
          for (std::size_t t = 0; t < t_out; ++t) {
            for (std::size_t j = 0; j < k; ++j) {
              const auto src = static_cast<std::ptrdiff_t>(t * stride + j) - static_cast<std::ptrdiff_t>(padding);
              if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_in)) continue;
              const double* gc = gcols.data() + t * width + j * c_in;
              double* dst = gx.data() + static_cast<std::size_t>(src) * c_in;
              for (std::size_t c = 0; c < c_in; ++c) dst[c] += gc[c];
            }
          }
        }
      });
}

Tensor depthwise_conv1d(const Tensor& x, const Tensor& kernel, std::size_t stride,
                        std::size_t padding) {
  require_rank(x, 2, "depthwise_conv1d");
  require_rank(kernel, 2, "depthwise_conv1d");
  const std::size_t t_in = x.dim(0), c = x.dim(1), k = kernel.dim(0);
  if (kernel.dim(1) != c) {
    throw ShapeError("depthwise_conv1d: kernel " + shape_str(kernel.shape()) +
                     " does not match input " + shape_str(x.shape()));
  }
  if (k % 2 == 0) throw ShapeError("depthwise_conv1d: kernel size must be odd");
  if (stride == 0) throw ShapeError("depthwise_conv1d: stride must be >= 1");
  if (k > t_in + 2 * padding) throw ShapeError("depthwise_conv1d: invalid geometry");
  const std::size_t t_out = (t_in + 2 * padding - k) / stride + 1;

  const auto xd = x.data();
  const auto wd = kernel.data();
  std::vector<double> out(t_out * c, 0.0);
  for (std::size_t t = 0; t < t_out; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto src = static_cast<std::ptrdiff_t>(t * stride + j) - static_cast<std::ptrdiff_t>(padding);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_in)) continue;
      for (std::size_t ch = 0; ch < c; ++ch) out[t * c + ch] += wd[j * c + ch] * xd[src * c + ch];
    }
  }
  return Tensor::make_op({t_out, c}, std::move(out), {x, kernel},
                         [x, kernel, t_in, t_out, c, k, stride, padding](std::span<const double> g,
                                                                         GradSinks in) {
                           const auto xd = x.data();
                           const auto wd = kernel.data();
                           for (std::size_t t = 0; t < t_out; ++t) {
                             for (std::size_t j = 0; j < k; ++j) {
                               const auto src = static_cast<std::ptrdiff_t>(t * stride + j) -
                                                static_cast<std::ptrdiff_t>(padding);
                               if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_in)) continue;
                               for (std::size_t ch = 0; ch < c; ++ch) {
                                 const double go = g[t * c + ch];
                                 if (in[0]) (*in[0])[src * c + ch] += go * wd[j * c + ch];
                                 if (in[1]) (*in[1])[j * c + ch] += go * xd[src * c + ch];
                               }
                             }
                           }
                         });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_rank(x, 2, "layer_norm");
  if (!(eps > 0)) throw ContractError("layer_norm: eps must be positive");
  const std::size_t rows = x.dim(0), c = x.dim(1);
  if (gain.numel() != c || bias.numel() != c) {
    throw ShapeError("layer_norm: affine params " + shape_str(gain.shape()) + "/" +
                     shape_str(bias.shape()) + " do not match " + shape_str(x.shape()));
  }
  const auto xd = x.data();
  const auto gd = gain.data();
  const auto bd = bias.data();
  auto xhat = std::make_shared<std::vector<double>>(rows * c);
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(rows * c);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xd.data() + r * c;
    double mu = 0.0;
    for (std::size_t i = 0; i < c; ++i) mu += row[i];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t i = 0; i < c; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t i = 0; i < c; ++i) {
      const double h = (row[i] - mu) * is;
      (*xhat)[r * c + i] = h;
      out[r * c + i] = h * gd[i] + bd[i];
    }
  }
  return Tensor::make_op(x.shape(), std::move(out), {x, gain, bias},
                         [xhat, inv_std, gain, rows, c](std::span<const double> g, GradSinks in) {
                           const auto gd = gain.data();
                           std::vector<double> gh(c);
                           for (std::size_t r = 0; r < rows; ++r) {
                             const double* h = xhat->data() + r * c;
                             const double* go = g.data() + r * c;
                             if (in[1]) for (std::size_t i = 0; i < c; ++i) (*in[1])[i] += go[i] * h[i];
                             if (in[2]) for (std::size_t i = 0; i < c; ++i) (*in[2])[i] += go[i];
                             if (!in[0]) continue;
                             double mean_gh = 0.0, mean_ghh = 0.0;
                             for (std::size_t i = 0; i < c; ++i) {
                               gh[i] = go[i] * gd[i];
                               mean_gh += gh[i];
                               mean_ghh += gh[i] * h[i];
                             }
                             mean_gh /= static_cast<double>(c);
                             mean_ghh /= static_cast<double>(c);
                             double* gx = in[0]->data() + r * c;
                             const double is = (*inv_std)[r];
                             for (std::size_t i = 0; i < c; ++i) gx[i] += is * (gh[i] - mean_gh - h[i] * mean_ghh);
                           }
                         });
}

Tensor local_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t window,
                       std::size_t heads) {
  require_rank(q, 2, "local_attention");
  require_same(q, k, "local_attention");
  require_same(q, v, "local_attention");
  if (window % 2 == 0) throw ShapeError("local_attention: window must be odd");
  const std::size_t n = q.dim(0), c = q.dim(1);
  if (heads == 0 || c % heads != 0) {
    throw ShapeError("local_attention: " + std::to_string(c) + " channels not divisible into " +
                     std::to_string(heads) + " heads");
  }
  const std::size_t d = c / heads;
  const std::size_t radius = window / 2;
  const double temp = 1.0 / std::sqrt(static_cast<double>(d));
  const auto qd = q.data(), kd = k.data(), vd = v.data();

  // weights[(t * heads + h) * window + (j - t + radius)]
  auto weights = std::make_shared<std::vector<double>>(n * heads * window, 0.0);
  std::vector<double> out(n * c, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= radius ? t - radius : 0;
    const std::size_t hi = std::min(n - 1, t + radius);
    for (std::size_t h = 0; h < heads; ++h) {
      double* w = weights->data() + (t * heads + h) * window;
      const double* qt = qd.data() + t * c + h * d;
      double mx = -INFINITY;
      for (std::size_t j = lo; j <= hi; ++j) {
        const double* kj = kd.data() + j * c + h * d;
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += qt[i] * kj[i];
        s *= temp;
        w[j + radius - t] = s;
        mx = std::max(mx, s);
      }
      double z = 0.0;
      for (std::size_t j = lo; j <= hi; ++j) {
        double& wj = w[j + radius - t];
        wj = std::exp(wj - mx);
        z += wj;
      }
      double* ot = out.data() + t * c + h * d;
      for (std::size_t j = lo; j <= hi; ++j) {
        double& wj = w[j + radius - t];
        wj /= z;
        const double* vj = vd.data() + j * c + h * d;
        for (std::size_t i = 0; i < d; ++i) ot[i] += wj * vj[i];
      }
    }
  }

  return Tensor::make_op(
      {n, c}, std::move(out), {q, k, v},
      [q, k, v, weights, n, c, d, heads, window, radius, temp](std::span<const double> g, GradSinks in) {
        const auto qd = q.data(), kd = k.data(), vd = v.data();
        std::vector<double> ga(window);
        for (std::size_t t = 0; t < n; ++t) {
          const std::size_t lo = t >= radius ? t - radius : 0;
          const std::size_t hi = std::min(n - 1, t + radius);
          for (std::size_t h = 0; h < heads; ++h) {
            const double* w = weights->data() + (t * heads + h) * window;
            const double* go = g.data() + t * c + h * d;
            double dot = 0.0;
            for (std::size_t j = lo; j <= hi; ++j) {
              const double* vj = vd.data() + j * c + h * d;
              double s = 0.0;
              for (std::size_t i = 0; i < d; ++i) s += go[i] * vj[i];
              ga[j + radius - t] = s;
              dot += s * w[j + radius - t];
              if (in[2]) {
                double* gv = in[2]->data() + j * c + h * d;
                const double wj = w[j + radius - t];
                for (std::size_t i = 0; i < d; ++i) gv[i] += wj * go[i];
              }
            }
            if (!in[0] && !in[1]) continue;
            const double* qt = qd.data() + t * c + h * d;
            for (std::size_t j = lo; j <= hi; ++j) {
              const double gs = w[j + radius - t] * (ga[j + radius - t] - dot) * temp;
              const double* kj = kd.data() + j * c + h * d;
              if (in[0]) {
                double* gq = in[0]->data() + t * c + h * d;
                for (std::size_t i = 0; i < d; ++i) gq[i] += gs * kj[i];
              }
              if (in[1]) {
                double* gk = in[1]->data() + j * c + h * d;
                for (std::size_t i = 0; i < d; ++i) gk[i] += gs * qt[i];
              }
            }
          }
        }
      });
}

namespace {

template <typename F>
Tensor binary(const Tensor& a, const Tensor& b, const char* op, F&& f) {
  // f(x, y) -> {value, d/dx, d/dy}
  const bool broadcast_b = b.numel() == 1 && a.numel() != 1;
  const bool broadcast_a = a.numel() == 1 && b.numel() != 1;
  if (!broadcast_a && !broadcast_b) require_same(a, b, op);
  const Shape shape = broadcast_a ? b.shape() : a.shape();
  const std::size_t n = shape_numel(shape);
  const auto ad = a.data(), bd = b.data();
  std::vector<double> out(n), da(n), db(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [val, sa, sb] = f(ad[broadcast_a ? 0 : i], bd[broadcast_b ? 0 : i]);
    out[i] = val;
    da[i] = sa;
    db[i] = sb;
  }
  return Tensor::make_op(shape, std::move(out), {a, b},
                         [da = std::move(da), db = std::move(db), broadcast_a, broadcast_b](
                             std::span<const double> g, GradSinks in) {
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             if (in[0]) (*in[0])[broadcast_a ? 0 : i] += g[i] * da[i];
                             if (in[1]) (*in[1])[broadcast_b ? 0 : i] += g[i] * db[i];
                           }
                         });
}

struct Triple {
  double v, a, b;
};

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(a, b, "add", [](double x, double y) { return Triple{x + y, 1.0, 1.0}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(a, b, "sub", [](double x, double y) { return Triple{x - y, 1.0, -1.0}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(a, b, "mul", [](double x, double y) { return Triple{x * y, y, x}; });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(x, [factor](double v) { return std::pair{v * factor, factor}; });
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary(x, [value](double v) { return std::pair{v + value, 1.0}; });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0 ? std::pair{v, 1.0} : std::pair{0.0, 0.0}; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, [](double v) {
    const double s = stable_sigmoid(v);
    return std::pair{s, s * (1.0 - s)};
  });
}

Tensor softplus(const Tensor& x) {
  return unary(x, [](double v) {
    const double val = v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
    return std::pair{val, stable_sigmoid(v)};
  });
}

Tensor softmax_lastdim(const Tensor& x) {
  const std::size_t c = x.cols(), rows = x.rows();
  const auto xd = x.data();
  auto out = std::make_shared<std::vector<double>>(xd.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xd.data() + r * c;
    double* o = out->data() + r * c;
    const double mx = *std::max_element(in, in + c);
    double z = 0.0;
    for (std::size_t i = 0; i < c; ++i) z += (o[i] = std::exp(in[i] - mx));
    for (std::size_t i = 0; i < c; ++i) o[i] /= z;
  }
  std::vector<double> values = *out;
  return Tensor::make_op(x.shape(), std::move(values), {x},
                         [out, rows, c](std::span<const double> g, GradSinks in) {
                           for (std::size_t r = 0; r < rows; ++r) {
                             const double* y = out->data() + r * c;
                             const double* go = g.data() + r * c;
                             double dot = 0.0;
                             for (std::size_t i = 0; i < c; ++i) dot += go[i] * y[i];
                             double* gx = in[0]->data() + r * c;
                             for (std::size_t i = 0; i < c; ++i) gx[i] += y[i] * (go[i] - dot);
                           }
                         });
}

Tensor add_row(const Tensor& x, const Tensor& row) {
  require_rank(x, 2, "add_row");
  const std::size_t rows = x.dim(0), c = x.dim(1);
  if (row.numel() != c) {
    throw ShapeError("add_row: row " + shape_str(row.shape()) + " does not match " + shape_str(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto rd = row.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < c; ++i) out[r * c + i] += rd[i];
  return Tensor::make_op(x.shape(), std::move(out), {x, row},
                         [rows, c](std::span<const double> g, GradSinks in) {
                           if (in[0]) for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
                           if (in[1])
                             for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t i = 0; i < c; ++i) (*in[1])[i] += g[r * c + i];
                         });
}

Tensor mul_row(const Tensor& x, const Tensor& row) {
  require_rank(x, 2, "mul_row");
  const std::size_t rows = x.dim(0), c = x.dim(1);
  if (row.numel() != c) {
    throw ShapeError("mul_row: row " + shape_str(row.shape()) + " does not match " + shape_str(x.shape()));
  }
  const auto xd = x.data();
  const auto rd = row.data();
  std::vector<double> out(xd.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < c; ++i) out[r * c + i] = xd[r * c + i] * rd[i];
  return Tensor::make_op(x.shape(), std::move(out), {x, row},
                         [x, row, rows, c](std::span<const double> g, GradSinks in) {
                           const auto xd = x.data();
                           const auto rd = row.data();
                           for (std::size_t r = 0; r < rows; ++r) {
                             for (std::size_t i = 0; i < c; ++i) {
                               const double go = g[r * c + i];
                               if (in[0]) (*in[0])[r * c + i] += go * rd[i];
                               if (in[1]) (*in[1])[i] += go * xd[r * c + i];
                             }
                           }
                         });
}

Tensor sum(const Tensor& x) {
  const auto xd = x.data();
  const double s = std::accumulate(xd.begin(), xd.end(), 0.0);
  return Tensor::make_op({1}, {s}, {x}, [](std::span<const double> g, GradSinks in) {
    for (auto& v : *in[0]) v += g[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor take_row(const Tensor& x, std::size_t index) {
  require_rank(x, 2, "take_row");
  if (index >= x.dim(0)) {
    throw ShapeError("take_row: index " + std::to_string(index) + " out of range for " + shape_str(x.shape()));
  }
  const std::size_t c = x.dim(1);
  std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(index * c),
                          x.data().begin() + static_cast<std::ptrdiff_t>((index + 1) * c));
  return Tensor::make_op({1, c}, std::move(out), {x}, [index, c](std::span<const double> g, GradSinks in) {
    for (std::size_t i = 0; i < c; ++i) (*in[0])[index * c + i] += g[i];
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank(x, 2, "slice_cols");
  const std::size_t rows = x.dim(0), c = x.dim(1);
  if (begin >= end || end > c) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") out of range for " + shape_str(x.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<double> out(rows * w);
  const auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(xd.begin() + static_cast<std::ptrdiff_t>(r * c + begin), w, out.begin() + static_cast<std::ptrdiff_t>(r * w));
  return Tensor::make_op({rows, w}, std::move(out), {x},
                         [rows, c, w, begin](std::span<const double> g, GradSinks in) {
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t i = 0; i < w; ++i) (*in[0])[r * c + begin + i] += g[r * w + i];
                         });
}

} // namespace tadiff
