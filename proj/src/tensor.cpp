//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "equihg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Core>
#include <fmt/format.h>

#include "equihg/error.hpp"

namespace equihg {
namespace {
using Impl = detail::TensorImpl;
using ImplPtr = std::shared_ptr<Impl>;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

thread_local Tape *tls_tape = nullptr;

[[noreturn]] void shape_error(const char *op, const Shape &a, const Shape &b) {
  throw ShapeError(fmt::format("{}: incompatible shapes {} and {}", op,
                               shape_str(a), shape_str(b)));
}

// Returns the tape to record on, or nullptr when nothing needs gradients.
Tape *recording(std::initializer_list<const Tensor *> inputs) {
  if (tls_tape == nullptr)
    return nullptr;
  for (const Tensor *t : inputs) {
    if (t->requires_grad())
      return tls_tape;
  }
  return nullptr;
}

Tensor finish(Tensor out, std::initializer_list<const Tensor *> inputs,
              const std::function<Tape::Rule(Impl *)> &make_rule) {
  Tape *tape = recording(inputs);
  if (tape == nullptr)
    return out;
  out.impl()->requires_grad = true;
  out.impl()->is_leaf = false;
  std::vector<ImplPtr> in;
  for (const Tensor *t : inputs)
    in.push_back(t->impl());
  tape->record(std::move(in), out.impl(), make_rule(out.impl().get()));
  return out;
}

std::vector<std::size_t> strides_of(const Shape &shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;)
    s[i - 1] = s[i] * shape[i];
  return s;
}

Shape broadcast_shape(const char *op, const Shape &a, const Shape &b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1)
      shape_error(op, a, b);
    out[i] = da == 1 ? db : da;
  }
  return out;
}

// Calls f(out_flat, in_flat) for every element of `out` with the matching
// element of a broadcast input.
template <class F>
void for_each_broadcast(const Shape &out, const Shape &in, F &&f) {
  const std::size_t r = out.size();
  const std::size_t offset = r - in.size();
  std::vector<std::size_t> in_strides(r, 0);
  {
    auto s = strides_of(in);
    for (std::size_t i = 0; i < in.size(); ++i)
      in_strides[offset + i] = in[i] == 1 ? 0 : s[i];
  }
  const std::size_t n = shape_numel(out);
  std::vector<std::size_t> idx(r, 0);
  std::size_t in_flat = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    f(flat, in_flat);
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      in_flat += in_strides[d];
      if (idx[d] < out[d])
        break;
      in_flat -= in_strides[d] * idx[d];
      idx[d] = 0;
    }
  }
}

void accumulate(const ImplPtr &dst, std::span<const double> g) {
  if (!dst->requires_grad)
    return;
  auto buf = dst->grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i)
    buf[i] += g[i];
}

template <class Fwd, class Bwd>
Tensor unary(const Tensor &a, Fwd fwd, Bwd dfdx) {
  Buffer out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = fwd(x[i]);
  Tensor result = Tensor::from_buffer(a.shape(), std::move(out));
  return finish(result, { &a }, [ai = a.impl(), dfdx](Impl *o) {
    return [ai, o, dfdx] {
      if (!ai->requires_grad)
        return;
      auto buf = ai->grad_buffer();
      for (std::size_t i = 0; i < buf.size(); ++i)
        buf[i] += o->grad[i] * dfdx(ai->data[i], o->data[i]);
    };
  });
}

enum class BinOp { Add, Sub, Mul, Div };

Tensor binary_same(const Tensor &a, const Tensor &b, BinOp op) {
  const std::size_t n = a.numel();
  Buffer out(n);
  auto x = a.data(), y = b.data();
  switch (op) {
  case BinOp::Add:
    for (std::size_t i = 0; i < n; ++i)
      out[i] = x[i] + y[i];
    break;
  case BinOp::Sub:
    for (std::size_t i = 0; i < n; ++i)
      out[i] = x[i] - y[i];
    break;
  case BinOp::Mul:
    for (std::size_t i = 0; i < n; ++i)
      out[i] = x[i] * y[i];
    break;
  case BinOp::Div:
    for (std::size_t i = 0; i < n; ++i)
      out[i] = x[i] / y[i];
    break;
  }
  Tensor result = Tensor::from_buffer(a.shape(), std::move(out));
  return finish(result, { &a, &b },
                [ai = a.impl(), bi = b.impl(), op](Impl *o) {
                  return [ai, bi, o, op] {
                    const auto &g = o->grad;
                    const std::size_t n = g.size();
                    if (ai->requires_grad) {
                      auto da = ai->grad_buffer();
                      for (std::size_t i = 0; i < n; ++i) {
                        switch (op) {
                        case BinOp::Add:
                        case BinOp::Sub:
                          da[i] += g[i];
                          break;
                        case BinOp::Mul:
                          da[i] += g[i] * bi->data[i];
                          break;
                        case BinOp::Div:
                          da[i] += g[i] / bi->data[i];
                          break;
                        }
                      }
                    }
                    if (bi->requires_grad) {
                      auto db = bi->grad_buffer();
                      for (std::size_t i = 0; i < n; ++i) {
                        switch (op) {
                        case BinOp::Add:
                          db[i] += g[i];
                          break;
                        case BinOp::Sub:
                          db[i] -= g[i];
                          break;
                        case BinOp::Mul:
                          db[i] += g[i] * ai->data[i];
                          break;
                        case BinOp::Div: {
                          const double y = bi->data[i];
                          db[i] -= g[i] * ai->data[i] / (y * y);
                          break;
                        }
                        }
                      }
                    }
                  };
                });
}

Tensor binary(const char *name, const Tensor &a, const Tensor &b, BinOp op) {
  if (a.shape() == b.shape())
    return binary_same(a, b, op);
  const Shape out = broadcast_shape(name, a.shape(), b.shape());
  Tensor ab = a.shape() == out ? a : broadcast_to(a, out);
  Tensor bb = b.shape() == out ? b : broadcast_to(b, out);
  return binary_same(ab, bb, op);
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape &shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i)
    s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i)
    s.inner *= shape[i];
  return s;
}

void check_index(const char *op, std::span<const std::size_t> index,
                 std::size_t bound) {
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= bound)
      throw ShapeError(fmt::format("{}: index[{}] = {} out of range [0, {})",
                                   op, k, index[k], bound));
  }
}

std::size_t row_width(const Shape &shape) {
  return shape_numel(Shape(shape.begin() + 1, shape.end()));
}

Shape row_shape(const Shape &src, std::size_t rows) {
  Shape s = src;
  s[0] = rows;
  return s;
}
}  // namespace

std::size_t shape_numel(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t { 1 },
                         std::multiplies<>());
}

std::string shape_str(const Shape &shape) {
  return fmt::format("[{}]", fmt::join(shape, ", "));
}

// Tensor ---------------------------------------------------------------

Tensor::Tensor(): impl_(std::make_shared<Impl>()) {
  impl_->data.assign(1, 0.0);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto impl = std::make_shared<Impl>();
  impl->data.assign(shape_numel(shape), value);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data,
                         bool requires_grad) {
  return from_buffer(std::move(shape), Buffer(data.begin(), data.end()),
                     requires_grad);
}

Tensor Tensor::from_buffer(Shape shape, Buffer data, bool requires_grad) {
  if (shape_numel(shape) != data.size())
    throw ShapeError(fmt::format("shape {} does not hold {} values",
                                 shape_str(shape), data.size()));
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({}, { value }, requires_grad);
}

double Tensor::item() const {
  if (numel() != 1)
    throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2 || row >= dim(0) || col >= dim(1))
    throw ShapeError(fmt::format("at({}, {}) on shape {}", row, col,
                                 shape_str(shape())));
  return impl_->data[row * dim(1) + col];
}

std::span<const double> Tensor::grad() const {
  if (!impl_->has_grad)
    return {};
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_->has_grad)
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<Impl>(*impl_);
  impl->is_leaf = true;
  return Tensor(std::move(impl));
}

Tensor Tensor::detach() const {
  return from_buffer(shape(), impl_->data);
}

// Tape -----------------------------------------------------------------

struct Tape::Entry {
  std::vector<ImplPtr> inputs;
  ImplPtr output;
  Rule rule;
};

Tape::Tape() = default;
Tape::~Tape() = default;

std::size_t Tape::size() const {
  return entries_.size();
}

void Tape::clear() {
  entries_.clear();
}

void Tape::record(std::vector<ImplPtr> inputs, ImplPtr output, Rule rule) {
  entries_.push_back({ std::move(inputs), std::move(output), std::move(rule) });
}

void Tape::backward(const Tensor &loss) {
  if (loss.numel() != 1)
    throw ShapeError("backward() needs a one-element loss, got shape "
                     + shape_str(loss.shape()));
  if (entries_.empty())
    throw Error("backward() on an empty tape");

  for (Entry &e : entries_) {
    e.output->has_grad = false;
    e.output->grad.clear();
  }
  const auto &li = loss.impl();
  if (!li->requires_grad)
    throw Error("backward(): loss does not depend on any parameter");
  li->grad_buffer()[0] += 1.0;

  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output->has_grad)
      it->rule();
  }
}

TapeScope::TapeScope(Tape &tape): previous_(tls_tape) {
  tls_tape = &tape;
}

TapeScope::~TapeScope() {
  tls_tape = previous_;
}

NoTapeScope::NoTapeScope(): previous_(tls_tape) {
  tls_tape = nullptr;
}

NoTapeScope::~NoTapeScope() {
  tls_tape = previous_;
}

Tape *active_tape() {
  return tls_tape;
}

void backward(const Tensor &loss) {
  if (tls_tape == nullptr)
    throw Error("backward() without an active tape");
  tls_tape->backward(loss);
}

// Ops ------------------------------------------------------------------

Tensor add(const Tensor &a, const Tensor &b) {
  return binary("add", a, b, BinOp::Add);
}

Tensor sub(const Tensor &a, const Tensor &b) {
  return binary("sub", a, b, BinOp::Sub);
}

Tensor mul(const Tensor &a, const Tensor &b) {
  return binary("mul", a, b, BinOp::Mul);
}

Tensor div(const Tensor &a, const Tensor &b) {
  return binary("div", a, b, BinOp::Div);
}

Tensor scale(const Tensor &a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor &a, double value) {
  return unary(
      a, [value](double x) { return x + value; },
      [](double, double) { return 1.0; });
}

Tensor relu(const Tensor &a) {
  return unary(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

namespace {
double sigmoid(double x) {
  if (x >= 0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Tensor silu(const Tensor &a) {
  return unary(
      a, [](double x) { return x * sigmoid(x); },
      [](double x, double) {
        const double s = sigmoid(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Tensor square(const Tensor &a) {
  return unary(
      a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Tensor sqrt(const Tensor &a) {
  return unary(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return y > 0 ? 0.5 / y : 0.0; });
}

Tensor broadcast_to(const Tensor &a, const Shape &shape) {
  if (a.rank() > shape.size())
    shape_error("broadcast_to", a.shape(), shape);
  const std::size_t offset = shape.size() - a.rank();
  for (std::size_t i = 0; i < a.rank(); ++i) {
    if (a.dim(i) != 1 && a.dim(i) != shape[offset + i])
      shape_error("broadcast_to", a.shape(), shape);
  }

  Buffer out(shape_numel(shape));
  auto x = a.data();
  for_each_broadcast(shape, a.shape(),
                     [&](std::size_t o, std::size_t i) { out[o] = x[i]; });
  Tensor result = Tensor::from_buffer(shape, std::move(out));
  return finish(result, { &a }, [ai = a.impl()](Impl *o) {
    return [ai, o] {
      if (!ai->requires_grad)
        return;
      auto buf = ai->grad_buffer();
      for_each_broadcast(o->shape, ai->shape,
                         [&](std::size_t out_i, std::size_t in_i) {
                           buf[in_i] += o->grad[out_i];
                         });
    };
  });
}

Tensor reshape(const Tensor &a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    shape_error("reshape", a.shape(), shape);
  Tensor result = Tensor::from_buffer(
      std::move(shape), Buffer(a.data().begin(), a.data().end()));
  return finish(result, { &a }, [ai = a.impl()](Impl *o) {
    return [ai, o] { accumulate(ai, o->grad); };
  });
}

Tensor matmul(const Tensor &a, const Tensor &b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);

  Buffer out(m * n, 0.0);
  if (m > 0 && n > 0 && k > 0) {
    MapMat(out.data(), m, n).noalias() = CMapMat(a.data().data(), m, k)
                                         * CMapMat(b.data().data(), k, n);
  }
  Tensor result = Tensor::from_buffer({ m, n }, std::move(out));
  return finish(result, { &a, &b },
                [ai = a.impl(), bi = b.impl(), m, k, n](Impl *o) {
                  return [ai, bi, o, m, k, n] {
                    if (m == 0 || n == 0 || k == 0)
                      return;
                    CMapMat g(o->grad.data(), m, n);
                    if (ai->requires_grad) {
                      MapMat(ai->grad_buffer().data(), m, k).noalias() +=
                          g * CMapMat(bi->data.data(), k, n).transpose();
                    }
                    if (bi->requires_grad) {
                      MapMat(bi->grad_buffer().data(), k, n).noalias() +=
                          CMapMat(ai->data.data(), m, k).transpose() * g;
                    }
                  };
                });
}

Tensor linear(const Tensor &x, const Tensor &weight) {
  return linear(x, weight, Tensor::zeros({ 0 }));
}

Tensor linear(const Tensor &x, const Tensor &weight, const Tensor &bias) {
  const bool has_bias = bias.numel() > 0;
  if (x.rank() != 2 || weight.rank() != 2 || x.dim(1) != weight.dim(1))
    shape_error("linear", x.shape(), weight.shape());
  const std::size_t m = x.dim(0), in = x.dim(1), out_dim = weight.dim(0);
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != out_dim))
    shape_error("linear(bias)", weight.shape(), bias.shape());

  Buffer out(m * out_dim, 0.0);
  if (m > 0 && out_dim > 0) {
    MapMat y(out.data(), m, out_dim);
    if (in > 0) {
      y.noalias() = CMapMat(x.data().data(), m, in)
                    * CMapMat(weight.data().data(), out_dim, in).transpose();
    }
    if (has_bias) {
      y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data().data(),
                                                          out_dim);
    }
  }

  Tensor result = Tensor::from_buffer({ m, out_dim }, std::move(out));
  return finish(
      result, { &x, &weight, &bias },
      [xi = x.impl(), wi = weight.impl(), bi = bias.impl(), m, in, out_dim,
       has_bias](Impl *o) {
        return [xi, wi, bi, o, m, in, out_dim, has_bias] {
          if (m == 0 || out_dim == 0)
            return;
          CMapMat g(o->grad.data(), m, out_dim);
          if (in > 0 && xi->requires_grad) {
            MapMat(xi->grad_buffer().data(), m, in).noalias() +=
                g * CMapMat(wi->data.data(), out_dim, in);
          }
          if (in > 0 && wi->requires_grad) {
            MapMat(wi->grad_buffer().data(), out_dim, in).noalias() +=
                g.transpose() * CMapMat(xi->data.data(), m, in);
          }
          if (has_bias && bi->requires_grad) {
            Eigen::Map<Eigen::RowVectorXd>(bi->grad_buffer().data(),
                                           out_dim) += g.colwise().sum();
          }
        };
      });
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty())
    throw ShapeError("concat of zero tensors");
  const Shape &first = parts[0].shape();
  if (axis >= first.size())
    throw ShapeError(fmt::format("concat axis {} out of range for shape {}",
                                 axis, shape_str(first)));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor &p : parts) {
    Shape s = p.shape();
    if (s.size() != first.size())
      shape_error("concat", first, s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != first[i])
        shape_error("concat", first, s);
    }
    out_shape[axis] += s[axis];
  }

  const AxisSplit total = split_axis(out_shape, axis);
  Buffer out(shape_numel(out_shape));
  std::vector<std::size_t> widths;
  std::size_t col = 0;
  for (const Tensor &p : parts) {
    const std::size_t w = p.dim(axis) * total.inner;
    auto src = p.data();
    for (std::size_t r = 0; r < total.outer; ++r) {
      std::copy_n(src.begin() + r * w, w,
                  out.begin() + r * total.len * total.inner + col);
    }
    widths.push_back(w);
    col += w;
  }

  Tensor result = Tensor::from_buffer(out_shape, std::move(out));
  Tape *tape = nullptr;
  if (tls_tape != nullptr) {
    for (const Tensor &p : parts)
      tape = p.requires_grad() ? tls_tape : tape;
  }
  if (tape == nullptr)
    return result;

  result.impl()->requires_grad = true;
  result.impl()->is_leaf = false;
  std::vector<ImplPtr> inputs;
  for (const Tensor &p : parts)
    inputs.push_back(p.impl());
  const std::size_t row_len = total.len * total.inner;
  Impl *o = result.impl().get();
  tape->record(inputs, result.impl(),
               [inputs, o, widths, outer = total.outer, row_len] {
                 std::size_t col = 0;
                 for (std::size_t p = 0; p < inputs.size(); ++p) {
                   const std::size_t w = widths[p];
                   if (inputs[p]->requires_grad) {
                     auto buf = inputs[p]->grad_buffer();
                     for (std::size_t r = 0; r < outer; ++r) {
                       const double *g = o->grad.data() + r * row_len + col;
                       double *dst = buf.data() + r * w;
                       for (std::size_t i = 0; i < w; ++i)
                         dst[i] += g[i];
                     }
                   }
                   col += w;
                 }
               });
  return result;
}

Tensor narrow(const Tensor &a, std::size_t axis, std::size_t start,
              std::size_t length) {
  if (axis >= a.rank() || start + length > a.dim(axis))
    throw ShapeError(fmt::format("narrow(axis={}, start={}, length={}) on "
                                 "shape {}",
                                 axis, start, length, shape_str(a.shape())));
  const AxisSplit s = split_axis(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[axis] = length;
  const std::size_t w = length * s.inner;
  const std::size_t row = s.len * s.inner;
  const std::size_t off = start * s.inner;

  Buffer out(shape_numel(out_shape));
  auto x = a.data();
  for (std::size_t r = 0; r < s.outer; ++r)
    std::copy_n(x.begin() + r * row + off, w, out.begin() + r * w);

  Tensor result = Tensor::from_buffer(std::move(out_shape), std::move(out));
  return finish(result, { &a },
                [ai = a.impl(), outer = s.outer, w, row, off](Impl *o) {
                  return [ai, o, outer, w, row, off] {
                    if (!ai->requires_grad)
                      return;
                    auto buf = ai->grad_buffer();
                    for (std::size_t r = 0; r < outer; ++r) {
                      for (std::size_t i = 0; i < w; ++i)
                        buf[r * row + off + i] += o->grad[r * w + i];
                    }
                  };
                });
}

Tensor sum(const Tensor &a, std::size_t axis) {
  if (axis >= a.rank())
    throw ShapeError(fmt::format("sum axis {} out of range for shape {}", axis,
                                 shape_str(a.shape())));
  const AxisSplit s = split_axis(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));

  Buffer out(s.outer * s.inner, 0.0);
  auto x = a.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t l = 0; l < s.len; ++l) {
      const double *src = x.data() + (o * s.len + l) * s.inner;
      double *dst = out.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i)
        dst[i] += src[i];
    }
  }

  Tensor result = Tensor::from_buffer(std::move(out_shape), std::move(out));
  return finish(result, { &a }, [ai = a.impl(), s](Impl *o) {
    return [ai, o, s] {
      if (!ai->requires_grad)
        return;
      auto buf = ai->grad_buffer();
      for (std::size_t oo = 0; oo < s.outer; ++oo) {
        for (std::size_t l = 0; l < s.len; ++l) {
          double *dst = buf.data() + (oo * s.len + l) * s.inner;
          const double *g = o->grad.data() + oo * s.inner;
          for (std::size_t i = 0; i < s.inner; ++i)
            dst[i] += g[i];
        }
      }
    };
  });
}

Tensor mean(const Tensor &a, std::size_t axis) {
  if (axis >= a.rank() || a.dim(axis) == 0)
    throw ShapeError(fmt::format("mean over empty or missing axis {} of {}",
                                 axis, shape_str(a.shape())));
  return scale(sum(a, axis), 1.0 / static_cast<double>(a.dim(axis)));
}

Tensor sum_all(const Tensor &a) {
  double total = 0;
  for (double v : a.data())
    total += v;
  Tensor result = Tensor::scalar(total);
  return finish(result, { &a }, [ai = a.impl()](Impl *o) {
    return [ai, o] {
      if (!ai->requires_grad)
        return;
      auto buf = ai->grad_buffer();
      const double g = o->grad[0];
      for (double &v : buf)
        v += g;
    };
  });
}

Tensor scatter_sum(const Tensor &src, std::span<const std::size_t> index,
                   std::size_t out_size) {
  if (src.rank() == 0 || src.dim(0) != index.size())
    throw ShapeError(fmt::format("scatter_sum: {} indices for source of "
                                 "shape {}",
                                 index.size(), shape_str(src.shape())));
  check_index("scatter_sum", index, out_size);
  const Shape out_shape = row_shape(src.shape(), out_size);
  const std::size_t w = row_width(src.shape());

  Buffer out(out_size * w, 0.0);
  auto x = src.data();
  for (std::size_t k = 0; k < index.size(); ++k) {
    const double *s = x.data() + k * w;
    double *d = out.data() + index[k] * w;
    for (std::size_t i = 0; i < w; ++i)
      d[i] += s[i];
  }

  Tensor result = Tensor::from_buffer(out_shape, std::move(out));
  return finish(result, { &src },
                [si = src.impl(),
                 idx = std::vector<std::size_t>(index.begin(), index.end()),
                 w](Impl *o) {
                  return [si, o, idx, w] {
                    if (!si->requires_grad)
                      return;
                    auto buf = si->grad_buffer();
                    for (std::size_t k = 0; k < idx.size(); ++k) {
                      const double *g = o->grad.data() + idx[k] * w;
                      double *d = buf.data() + k * w;
                      for (std::size_t i = 0; i < w; ++i)
                        d[i] += g[i];
                    }
                  };
                });
}

Tensor gather(const Tensor &src, std::span<const std::size_t> index) {
  if (src.rank() == 0)
    throw ShapeError("gather from a rank-0 tensor");
  check_index("gather", index, src.dim(0));
  const Shape out_shape = row_shape(src.shape(), index.size());
  const std::size_t w = row_width(src.shape());

  Buffer out(index.size() * w);
  auto x = src.data();
  for (std::size_t k = 0; k < index.size(); ++k)
    std::copy_n(x.begin() + index[k] * w, w, out.begin() + k * w);

  Tensor result = Tensor::from_buffer(out_shape, std::move(out));
  return finish(result, { &src },
                [si = src.impl(),
                 idx = std::vector<std::size_t>(index.begin(), index.end()),
                 w](Impl *o) {
                  return [si, o, idx, w] {
                    if (!si->requires_grad)
                      return;
                    auto buf = si->grad_buffer();
                    for (std::size_t k = 0; k < idx.size(); ++k) {
                      const double *g = o->grad.data() + k * w;
                      double *d = buf.data() + idx[k] * w;
                      for (std::size_t i = 0; i < w; ++i)
                        d[i] += g[i];
                    }
                  };
                });
}

// Gradient checking ------------------------------------------------------

namespace {
double eval_scalar(const std::function<Tensor()> &f) {
  NoTapeScope no_tape;
  const double v = f().item();
  if (!std::isfinite(v))
    throw NumericError("grad_check: non-finite function value at probe point");
  return v;
}
}  // namespace

double grad_check(const std::function<Tensor()> &f, std::span<Tensor> params,
                  double step) {
  if (!(step > 0))
    throw Error("grad_check: step must be positive");

  for (Tensor &p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = f();
    if (!std::isfinite(loss.item()))
      throw NumericError("grad_check: non-finite function value");
    if (loss.requires_grad())  // constant functions leave the tape empty
      tape.backward(loss);
  }

  double worst = 0.0;
  for (Tensor &p : params) {
    std::vector<double> analytic(p.numel(), 0.0);
    if (p.has_grad())
      std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = eval_scalar(f);
      values[i] = saved - step;
      const double down = eval_scalar(f);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = std::abs(analytic[i] - numeric)
                         / std::max(1.0, std::abs(analytic[i]));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

double grad_check(const std::function<Tensor(const Tensor &)> &f,
                  const Tensor &point, double step) {
  Tensor x = point.clone();
  x.set_requires_grad(true);
  Tensor params[] = { x };
  return grad_check([&] { return f(x); }, params, step);
}

}  // namespace equihg
