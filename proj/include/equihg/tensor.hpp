//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace equihg {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape &shape);
std::string shape_str(const Shape &shape);

/// Cache-line aligned storage. Vectorized kernels peel unaligned heads, so a
/// fixed base alignment keeps results independent of heap addresses.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{ 64 };

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U> &) noexcept { }

  T *allocate(std::size_t n) {
    return static_cast<T *>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T *p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U> &) const noexcept { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

namespace detail {
struct TensorImpl {
  Shape shape;
  Buffer data;
  Buffer grad;
  bool has_grad = false;
  bool requires_grad = false;
  bool is_leaf = true;

  std::span<double> grad_buffer() {
    if (!has_grad) {
      grad.assign(data.size(), 0.0);
      has_grad = true;
    }
    return grad;
  }
};
}  // namespace detail

/// Dense row-major float64 array. Copies share storage (a handle, like a
/// framework tensor); use clone() for a deep copy.
class Tensor {
 public:
  Tensor();

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor from_buffer(Shape shape, Buffer data,
                            bool requires_grad = false);
  /// Rank-0 tensor.
  static Tensor scalar(double value, bool requires_grad = false);

  const Shape &shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }
  double item() const;
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool value) { impl_->requires_grad = value; }
  bool is_leaf() const { return impl_->is_leaf; }

  bool has_grad() const { return impl_->has_grad; }
  /// Empty span when no gradient has been accumulated yet.
  std::span<const double> grad() const;
  std::span<double> mutable_grad() { return impl_->grad_buffer(); }
  void zero_grad();

  Tensor clone() const;
  Tensor detach() const;

  bool same_storage(const Tensor &other) const { return impl_ == other.impl_; }

  const std::shared_ptr<detail::TensorImpl> &impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl)
      : impl_(std::move(impl)) { }

  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Define-by-run record of differentiable operations.
///
/// While a TapeScope is active on a thread, every op with at least one
/// requires_grad input appends an entry here. Entries are appended after
/// their inputs exist, so the list is already in topological order.
class Tape {
 public:
  using Rule = std::function<void()>;

  Tape();
  ~Tape();
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  std::size_t size() const;
  void clear();

  void record(std::vector<std::shared_ptr<detail::TensorImpl>> inputs,
              std::shared_ptr<detail::TensorImpl> output, Rule rule);

  /// Reverse sweep from a one-element loss. Intermediate gradients are
  /// reset first; leaf gradients accumulate across calls.
  void backward(const Tensor &loss);

 private:
  struct Entry;
  std::vector<Entry> entries_;
};

/// Makes `tape` the recording target for this thread until destruction.
class TapeScope {
 public:
  explicit TapeScope(Tape &tape);
  ~TapeScope();
  TapeScope(const TapeScope &) = delete;
  TapeScope &operator=(const TapeScope &) = delete;

 private:
  Tape *previous_;
};

/// Suspends recording (evaluation mode).
class NoTapeScope {
 public:
  NoTapeScope();
  ~NoTapeScope();
  NoTapeScope(const NoTapeScope &) = delete;
  NoTapeScope &operator=(const NoTapeScope &) = delete;

 private:
  Tape *previous_;
};

Tape *active_tape();

/// backward() on the thread's active tape.
void backward(const Tensor &loss);

// Elementwise, with trailing-aligned broadcasting over size-1 axes.
Tensor add(const Tensor &a, const Tensor &b);
Tensor sub(const Tensor &a, const Tensor &b);
Tensor mul(const Tensor &a, const Tensor &b);
Tensor div(const Tensor &a, const Tensor &b);

Tensor scale(const Tensor &a, double factor);
Tensor add_scalar(const Tensor &a, double value);

Tensor relu(const Tensor &a);
Tensor silu(const Tensor &a);
Tensor square(const Tensor &a);
/// Gradient at exactly 0 is taken as 0.
Tensor sqrt(const Tensor &a);

Tensor broadcast_to(const Tensor &a, const Shape &shape);
Tensor reshape(const Tensor &a, Shape shape);

/// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor &a, const Tensor &b);
/// x [m,in], weight [out,in], bias [out] (may be undefined) -> [m,out]
Tensor linear(const Tensor &x, const Tensor &weight, const Tensor &bias);
Tensor linear(const Tensor &x, const Tensor &weight);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis);
Tensor narrow(const Tensor &a, std::size_t axis, std::size_t start,
              std::size_t length);

/// Reduces and drops `axis`.
Tensor sum(const Tensor &a, std::size_t axis);
Tensor mean(const Tensor &a, std::size_t axis);
/// Rank-0 total.
Tensor sum_all(const Tensor &a);

/// out[r] = sum of src[k] over k with index[k] == r, in ascending k.
Tensor scatter_sum(const Tensor &src, std::span<const std::size_t> index,
                   std::size_t out_size);
/// out[k] = src[index[k]].
Tensor gather(const Tensor &src, std::span<const std::size_t> index);

/// Max over coordinates of |analytic - central difference| / max(1,
/// |analytic|) for a scalar function of `point`.
double grad_check(const std::function<Tensor(const Tensor &)> &f,
                  const Tensor &point, double step);

/// Same check over every entry of `params`, which are perturbed in place
/// and restored. `f` must read the parameters through these handles.
double grad_check(const std::function<Tensor()> &f, std::span<Tensor> params,
                  double step);

}  // namespace equihg
