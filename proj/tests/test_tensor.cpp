//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "equihg/error.hpp"
#include "equihg/tensor.hpp"

using namespace equihg;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64 &rng, double lo = -2.0,
                     double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> data(shape_numel(shape));
  for (double &v : data)
    v = u(rng);
  return Tensor::from_data(std::move(shape), std::move(data));
}

std::vector<double> values(const Tensor &t) {
  return { t.data().begin(), t.data().end() };
}

}  // namespace

TEST(TensorOps, MatmulIdentity) {
  const Tensor a = Tensor::from_data({ 2, 2 }, { 1, 2, 3, 4 });
  const Tensor id = Tensor::from_data({ 2, 2 }, { 1, 0, 0, 1 });
  EXPECT_EQ(values(matmul(a, id)), (std::vector<double>{ 1, 2, 3, 4 }));
  EXPECT_THROW(matmul(a, Tensor::zeros({ 3, 2 })), ShapeError);
}

TEST(TensorOps, SiluAtZero) {
  EXPECT_EQ(silu(Tensor::from_data({ 1 }, { 0.0 })).item(), 0.0);
}

TEST(TensorOps, SumAndMeanAlongAxis) {
  const Tensor a = Tensor::from_data({ 2, 2 }, { 1, 2, 3, 4 });
  EXPECT_EQ(values(sum(a, 0)), (std::vector<double>{ 4, 6 }));
  EXPECT_EQ(values(sum(a, 1)), (std::vector<double>{ 3, 7 }));
  EXPECT_EQ(values(mean(a, 0)), (std::vector<double>{ 2, 3 }));
  EXPECT_EQ(sum_all(a).item(), 10.0);
}

TEST(TensorOps, BroadcastingArithmetic) {
  const Tensor a = Tensor::from_data({ 2, 3 }, { 1, 2, 3, 4, 5, 6 });
  const Tensor row = Tensor::from_data({ 3 }, { 10, 20, 30 });
  const Tensor col = Tensor::from_data({ 2, 1 }, { 1, 2 });
  EXPECT_EQ(values(add(a, row)), (std::vector<double>{ 11, 22, 33, 14, 25, 36 }));
  EXPECT_EQ(values(mul(a, col)), (std::vector<double>{ 1, 2, 3, 8, 10, 12 }));
  EXPECT_THROW(add(a, Tensor::zeros({ 2 })), ShapeError);
}

TEST(TensorOps, ConcatAndNarrow) {
  const Tensor a = Tensor::from_data({ 2, 1 }, { 1, 2 });
  const Tensor b = Tensor::from_data({ 2, 2 }, { 3, 4, 5, 6 });
  const Tensor c = concat({ a, b }, 1);
  EXPECT_EQ(c.shape(), (Shape{ 2, 3 }));
  EXPECT_EQ(values(c), (std::vector<double>{ 1, 3, 4, 2, 5, 6 }));
  EXPECT_EQ(values(narrow(c, 1, 1, 2)), (std::vector<double>{ 3, 4, 5, 6 }));
  EXPECT_EQ(values(concat({ a, a }, 0)), (std::vector<double>{ 1, 2, 1, 2 }));
}

TEST(ScatterGather, Definitions) {
  const Tensor src = Tensor::from_data({ 3, 1 }, { 1, 2, 3 });
  const std::size_t idx[] = { 0, 0, 1 };
  EXPECT_EQ(values(scatter_sum(src, idx, 2)), (std::vector<double>{ 3, 3 }));

  const Tensor empty = Tensor::zeros({ 0, 1 });
  const Tensor none = scatter_sum(empty, std::span<const std::size_t>{}, 2);
  EXPECT_EQ(none.shape(), (Shape{ 2, 1 }));
  EXPECT_EQ(values(none), (std::vector<double>{ 0, 0 }));

  const Tensor s2 = Tensor::from_data({ 2, 1 }, { 1, 2 });
  const std::size_t g[] = { 1, 1, 0 };
  EXPECT_EQ(values(gather(s2, g)), (std::vector<double>{ 2, 2, 1 }));
  const Tensor g0 = gather(s2, std::span<const std::size_t>{});
  EXPECT_EQ(g0.shape(), (Shape{ 0, 1 }));

  const std::size_t bad[] = { 2 };
  EXPECT_THROW(gather(s2, bad), Error);
  EXPECT_THROW(scatter_sum(Tensor::zeros({ 1, 1 }), bad, 2), Error);
}

TEST(ScatterGather, JointPermutationInvariance) {
  std::mt19937_64 rng(1);
  const Tensor src = random_tensor({ 6, 3 }, rng);
  const std::vector<std::size_t> idx{ 0, 2, 1, 2, 0, 2 };
  const Tensor ref = scatter_sum(src, idx, 3);
  const std::vector<std::size_t> perm{ 5, 3, 0, 1, 4, 2 };
  const Tensor psrc = gather(src, perm);
  std::vector<std::size_t> pidx;
  for (std::size_t p : perm)
    pidx.push_back(idx[p]);
  const Tensor out = scatter_sum(psrc, pidx, 3);
  for (std::size_t i = 0; i < ref.numel(); ++i)
    EXPECT_NEAR(out.data()[i], ref.data()[i], 1e-12);
}

TEST(ScatterGather, GatherThenScatterCountsMultiplicity) {
  const Tensor src = Tensor::from_data({ 3, 2 }, { 1, 2, 3, 4, 5, 6 });
  const std::vector<std::size_t> idx{ 0, 2, 2, 2, 0 };
  const Tensor out = scatter_sum(gather(src, idx), idx, 3);
  EXPECT_EQ(values(out), (std::vector<double>{ 2, 4, 0, 0, 15, 18 }));
}

TEST(ScatterGather, Linearity) {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor({ 4, 3 }, rng);
  const std::vector<std::size_t> idx{ 3, 1, 1, 0, 2, 3 };
  const std::vector<std::size_t> to{ 0, 1, 0, 1, 1, 0 };
  for (double alpha : { -2.0, 0.5, 4.0 }) {
    const Tensor lhs = scatter_sum(gather(scale(x, alpha), idx), to, 2);
    const Tensor rhs = scale(scatter_sum(gather(x, idx), to, 2), alpha);
    EXPECT_EQ(values(lhs), values(rhs));
  }
}

TEST(Autodiff, SumOfSquares) {
  Tensor w = Tensor::from_data({ 2 }, { 1, 2 }, true);
  Tape tape;
  TapeScope scope(tape);
  tape.backward(sum_all(square(w)));
  EXPECT_EQ(std::vector<double>(w.grad().begin(), w.grad().end()),
            (std::vector<double>{ 2, 4 }));
}

TEST(Autodiff, Product) {
  Tensor a = Tensor::scalar(3, true), b = Tensor::scalar(5, true);
  Tape tape;
  TapeScope scope(tape);
  tape.backward(mul(a, b));
  EXPECT_EQ(a.grad()[0], 5.0);
  EXPECT_EQ(b.grad()[0], 3.0);
}

TEST(Autodiff, FanOutAccumulates) {
  Tensor w = Tensor::from_data({ 1, 1 }, { 0.7 }, true);
  const std::size_t idx[] = { 0, 0 };
  Tape tape;
  TapeScope scope(tape);
  tape.backward(sum_all(scatter_sum(gather(w, idx), idx, 1)));
  EXPECT_EQ(w.grad()[0], 2.0);
}

TEST(Autodiff, SecondBackwardDoublesLeafGrads) {
  Tensor w = Tensor::from_data({ 3 }, { 1, -2, 0.5 }, true);
  Tape tape;
  TapeScope scope(tape);
  const Tensor loss = sum_all(mul(silu(w), w));
  tape.backward(loss);
  const std::vector<double> once(w.grad().begin(), w.grad().end());
  tape.backward(loss);
  for (std::size_t i = 0; i < once.size(); ++i)
    EXPECT_EQ(w.grad()[i], 2.0 * once[i]);
  w.zero_grad();
  for (double g : w.grad())
    EXPECT_EQ(g, 0.0);
}

TEST(Autodiff, NoTapeRecordsNothing) {
  Tape tape;
  TapeScope scope(tape);
  Tensor w = Tensor::from_data({ 2 }, { 1, 2 }, true);
  {
    NoTapeScope off;
    (void)square(w);
  }
  EXPECT_EQ(tape.size(), 0u);
  (void)square(w);
  EXPECT_EQ(tape.size(), 1u);
}

TEST(GradCheck, QuadraticIsExact) {
  const Tensor p = Tensor::from_data({ 3 }, { 1, 2, 3 });
  EXPECT_LE(grad_check([](const Tensor &x) { return sum_all(square(x)); }, p,
                       1e-5),
            1e-8);
}

TEST(GradCheck, SiluSum) {
  std::mt19937_64 rng(4);
  const Tensor p = random_tensor({ 5 }, rng);
  EXPECT_LE(grad_check([](const Tensor &x) { return sum_all(silu(x)); }, p,
                       1e-5),
            1e-6);
}

TEST(GradCheck, ConstantFunction) {
  const Tensor p = Tensor::from_data({ 2 }, { 1, 2 });
  EXPECT_LE(grad_check([](const Tensor &) { return Tensor::scalar(3.0); }, p,
                       1e-5),
            1e-10);
}

// Every differentiable op, 20 random points each.
TEST(GradCheck, EveryOpAtRandomPoints) {
  std::mt19937_64 rng(11);
  const Tensor other = random_tensor({ 3, 4 }, rng);
  const Tensor weight = random_tensor({ 2, 4 }, rng);
  const Tensor bias = random_tensor({ 2 }, rng);
  const Tensor row = random_tensor({ 4 }, rng);
  const Tensor positive = random_tensor({ 3, 4 }, rng, 0.5, 2.0);
  const std::vector<std::size_t> idx{ 2, 0, 0, 1, 2 };
  const std::vector<std::size_t> to{ 1, 1, 0, 3, 2 };

  struct Case {
    std::string name;
    std::function<Tensor(const Tensor &)> f;
    double lo = -2.0, hi = 2.0;
  };
  const std::vector<Case> cases{
    { "add", [&](const Tensor &x) { return sum_all(square(add(x, other))); } },
    { "add_broadcast",
      [&](const Tensor &x) { return sum_all(square(add(x, row))); } },
    { "sub", [&](const Tensor &x) { return sum_all(square(sub(other, x))); } },
    { "mul", [&](const Tensor &x) { return sum_all(mul(mul(x, other), x)); } },
    { "div", [&](const Tensor &x) { return sum_all(div(other, x)); }, 0.5, 2.0 },
    { "div_numerator",
      [&](const Tensor &x) { return sum_all(div(square(x), positive)); } },
    { "scale", [&](const Tensor &x) { return sum_all(square(scale(x, -1.5))); } },
    { "add_scalar",
      [&](const Tensor &x) { return sum_all(square(add_scalar(x, 0.3))); } },
    { "relu", [&](const Tensor &x) { return sum_all(mul(relu(x), other)); } },
    { "silu", [&](const Tensor &x) { return sum_all(mul(silu(x), other)); } },
    { "sqrt", [&](const Tensor &x) { return sum_all(mul(sqrt(x), other)); },
      0.5, 3.0 },
    { "broadcast_to",
      [&](const Tensor &x) {
        return sum_all(mul(broadcast_to(narrow(x, 0, 0, 1), { 3, 4 }), other));
      } },
    { "reshape",
      [&](const Tensor &x) {
        return sum_all(square(matmul(reshape(x, { 4, 3 }), other)));
      } },
    { "matmul",
      [&](const Tensor &x) {
        return sum_all(square(matmul(x, reshape(other, { 4, 3 }))));
      } },
    { "linear",
      [&](const Tensor &x) { return sum_all(square(linear(x, weight, bias))); } },
    { "concat",
      [&](const Tensor &x) {
        return sum_all(square(mul(concat({ x, other }, 0),
                                  concat({ other, x }, 0))));
      } },
    { "narrow",
      [&](const Tensor &x) { return sum_all(square(narrow(x, 1, 1, 2))); } },
    { "sum_axis",
      [&](const Tensor &x) { return sum_all(square(sum(x, 0))); } },
    { "mean_axis",
      [&](const Tensor &x) { return sum_all(square(mean(x, 1))); } },
    { "gather_scatter",
      [&](const Tensor &x) {
        return sum_all(square(scatter_sum(gather(x, idx), to, 4)));
      } },
  };

  for (const Case &c : cases) {
    for (int k = 0; k < 20; ++k) {
      Tensor p = random_tensor({ 3, 4 }, rng, c.lo, c.hi);
      // keep relu away from its kink
      if (c.name == "relu")
        for (double &v : p.mutable_data())
          if (std::abs(v) < 1e-3)
            v = 0.1;
      ASSERT_LE(grad_check(c.f, p, 1e-5), 1e-6) << c.name << " point " << k;
    }
  }
}

TEST(GradCheck, ParameterOverload) {
  std::mt19937_64 rng(12);
  Tensor w = random_tensor({ 2, 3 }, rng);
  Tensor b = random_tensor({ 2 }, rng);
  const Tensor x = random_tensor({ 5, 3 }, rng);
  Tensor params[] = { w, b };
  const double err = grad_check(
      [&] { return sum_all(silu(linear(x, w, b))); }, params, 1e-5);
  EXPECT_LE(err, 1e-6);
}

TEST(Storage, BuffersAreCacheLineAligned) {
  std::mt19937_64 rng(5);
  for (std::size_t n : { 1u, 3u, 7u, 33u }) {
    const Tensor a = random_tensor({ n, 5 }, rng);
    const Tensor b = random_tensor({ 5, 3 }, rng);
    for (const Tensor &t : { a, matmul(a, b), a.clone() })
      EXPECT_EQ(reinterpret_cast<std::uintptr_t>(t.data().data()) % 64, 0u);
  }
}
