//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "equihg/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "equihg/error.hpp"

namespace equihg {

// ParameterSet ----------------------------------------------------------

Tensor &ParameterSet::add(std::string name, Tensor value) {
  if (index_.count(name) != 0)
    throw InvariantError("duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({ std::move(name), std::move(value) });
  return entries_.back().value;
}

bool ParameterSet::contains(std::string_view name) const {
  return index_.count(std::string(name)) != 0;
}

Tensor &ParameterSet::get(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end())
    throw Error("missing parameter '" + std::string(name) + "'");
  return entries_[it->second].value;
}

const Tensor &ParameterSet::get(std::string_view name) const {
  return const_cast<ParameterSet *>(this)->get(name);
}

std::size_t ParameterSet::num_scalars() const {
  std::size_t n = 0;
  for (const auto &e : entries_)
    n += e.value.numel();
  return n;
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  for (const auto &e : entries_)
    out.push_back(e.value);
  return out;
}

void ParameterSet::zero_grad() {
  for (auto &e : entries_)
    e.value.zero_grad();
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const auto &e : entries_) {
    Tensor t = e.value.detach();
    t.set_requires_grad(e.value.requires_grad());
    out.add(e.name, t);
  }
  return out;
}

void ParameterSet::copy_values_from(const ParameterSet &other) {
  for (auto &e : entries_) {
    auto src = other.get(e.name).data();
    auto dst = e.value.mutable_data();
    if (src.size() != dst.size())
      throw InvariantError("parameter size mismatch for " + e.name);
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

void ParameterSet::add_grads_from(const ParameterSet &other) {
  for (auto &e : entries_) {
    const Tensor &src = other.get(e.name);
    if (!src.has_grad())
      continue;
    auto g = src.grad();
    auto dst = e.value.mutable_grad();
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] += g[i];
  }
}

// Layers ----------------------------------------------------------------

Tensor activate(const Tensor &x, Activation act) {
  return act == Activation::Silu ? silu(x) : relu(x);
}

Tensor Mlp::forward_from(std::size_t first, const Tensor &x) const {
  Tensor h = x;
  for (std::size_t i = first; i < layers.size(); ++i) {
    h = layers[i](h);
    if (i + 1 < layers.size())
      h = activate(h, activation);
  }
  return h;
}

namespace {
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}
}  // namespace

ParamBuilder ParamBuilder::create(ParameterSet &params, std::uint64_t seed) {
  return ParamBuilder(params, seed);
}

ParamBuilder ParamBuilder::bind(ParameterSet &params) {
  return ParamBuilder(params, std::nullopt);
}

Tensor ParamBuilder::tensor(const std::string &name, Shape shape,
                            double bound) {
  if (!seed_) {
    Tensor &t = params_->get(name);
    if (t.shape() != shape)
      throw Error(fmt::format("parameter '{}' has shape {}, expected {}", name,
                              shape_str(t.shape()), shape_str(shape)));
    t.set_requires_grad(true);
    return t;
  }

  // Each parameter draws from its own stream keyed by (seed, name), so
  // adding a layer never reshuffles the others.
  const std::uint64_t h = fnv1a(name);
  std::seed_seq seq { static_cast<std::uint32_t>(*seed_),
                      static_cast<std::uint32_t>(*seed_ >> 32),
                      static_cast<std::uint32_t>(h),
                      static_cast<std::uint32_t>(h >> 32) };
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(shape_numel(shape), 0.0);
  if (bound > 0) {
    for (double &v : data)
      v = dist(rng);
  }
  return params_->add(name, Tensor::from_data(std::move(shape), std::move(data),
                                              true));
}

Linear ParamBuilder::linear(const std::string &name, std::size_t in,
                            std::size_t out) {
  if (in == 0 || out == 0)
    throw ConfigError("linear layer '" + name + "' needs positive dimensions");
  Linear l;
  l.weight = tensor(name + ".weight", { out, in },
                    1.0 / std::sqrt(static_cast<double>(in)));
  l.bias = tensor(name + ".bias", { out }, 0.0);
  return l;
}

Mlp ParamBuilder::mlp(const std::string &name,
                      std::span<const std::size_t> dims, Activation act) {
  if (dims.size() < 2)
    throw ConfigError("mlp '" + name + "' needs at least two dimensions");
  Mlp m;
  m.activation = act;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i)
    m.layers.push_back(linear(fmt::format("{}.{}", name, i), dims[i],
                              dims[i + 1]));
  return m;
}

Mlp ParamBuilder::mlp(const std::string &name,
                      std::initializer_list<std::size_t> dims, Activation act) {
  return mlp(name, std::span<const std::size_t>(dims.begin(), dims.size()),
             act);
}

Tensor ParamBuilder::scalar(const std::string &name, double init) {
  if (!seed_)
    return tensor(name, { 1 }, 0.0);
  return params_->add(name, Tensor::from_data({ 1 }, { init }, true));
}

// Optimizer and losses ----------------------------------------------------

void adam_step(ParameterSet &params, AdamState &state) {
  for (const auto &e : params) {
    for (double g : e.value.grad()) {
      if (!std::isfinite(g))
        throw NumericError("non-finite gradient in '" + e.name + "'");
    }
  }

  const AdamConfig &c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);

  for (auto &e : params) {
    auto &m = state.m[e.name];
    auto &v = state.v[e.name];
    const std::size_t n = e.value.numel();
    if (m.size() != n) {
      m.assign(n, 0.0);
      v.assign(n, 0.0);
    }
    auto p = e.value.mutable_data();
    auto g = e.value.grad();
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

Tensor mse_loss(const Tensor &pred, const Tensor &target) {
  if (pred.numel() != target.numel() || pred.numel() == 0)
    throw ShapeError(fmt::format("mse_loss: prediction {} vs target {}",
                                 shape_str(pred.shape()),
                                 shape_str(target.shape())));
  const Shape flat { pred.numel() };
  Tensor p = pred.rank() == 1 ? pred : reshape(pred, flat);
  Tensor t = target.rank() == 1 ? target : reshape(target, flat);
  return mean(square(sub(p, t)), 0);
}

double mae_metric(std::span<const double> pred,
                  std::span<const double> target) {
  if (pred.size() != target.size())
    throw ShapeError(fmt::format("mae_metric: {} predictions vs {} targets",
                                 pred.size(), target.size()));
  if (pred.empty())
    throw DataError("mae_metric on an empty set");
  double total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    total += std::abs(pred[i] - target[i]);
  return total / static_cast<double>(pred.size());
}

// Checkpoints -----------------------------------------------------------

namespace {
constexpr char kMagic[5] = { 'E', 'Q', 'H', 'G', '1' };

template <class T>
void put(std::ostream &out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(std::begin(bytes), std::end(bytes));
  out.write(reinterpret_cast<const char *>(bytes), sizeof(T));
}

template <class T>
T take(std::istream &in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char *>(bytes), sizeof(T)))
    throw DataError("truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(std::begin(bytes), std::end(bytes));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void put_record(std::ostream &out, const std::string &name, const Shape &shape,
                std::span<const double> data) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
  for (std::size_t d : shape)
    put<std::uint64_t>(out, d);
  for (double v : data)
    put<double>(out, v);
}
}  // namespace

void save_checkpoint(const std::filesystem::path &path,
                     const nlohmann::json &meta, const ParameterSet &params,
                     const AdamState *optim) {
  nlohmann::json full = meta;
  std::uint64_t count = params.size();
  if (optim) {
    full["optim"] = { { "lr", optim->config.lr },
                      { "beta1", optim->config.beta1 },
                      { "beta2", optim->config.beta2 },
                      { "eps", optim->config.eps } };
    count += 1 + optim->m.size() + optim->v.size();
  }
  const std::string header = full.dump();

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error("cannot write " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    put<std::uint64_t>(out, header.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    put<std::uint64_t>(out, count);
    for (const auto &e : params)
      put_record(out, e.name, e.value.shape(), e.value.data());
    if (optim) {
      const double step = static_cast<double>(optim->step);
      put_record(out, "optim/step", {}, std::span<const double>(&step, 1));
      for (const auto &[name, m] : optim->m)
        put_record(out, "optim/m/" + name, { m.size() }, m);
      for (const auto &[name, v] : optim->v)
        put_record(out, "optim/v/" + name, { v.size() }, v);
    }
    if (!out)
      throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open checkpoint " + path.string());

  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic))
      || !std::equal(std::begin(magic), std::end(magic), kMagic))
    throw DataError(path.string() + ": not an EQHG1 checkpoint");

  Checkpoint ck;
  const auto header_len = take<std::uint64_t>(in);
  if (header_len > (1u << 26))
    throw DataError("implausible checkpoint header length");
  std::string header(header_len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_len)))
    throw DataError("truncated checkpoint header");
  try {
    ck.meta = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("bad checkpoint metadata: ") + e.what());
  }

  AdamState optim;
  bool has_optim = false;
  if (ck.meta.contains("optim")) {
    const auto &o = ck.meta["optim"];
    optim.config = { o.at("lr").get<double>(), o.at("beta1").get<double>(),
                     o.at("beta2").get<double>(), o.at("eps").get<double>() };
    has_optim = true;
  }

  const auto count = take<std::uint64_t>(in);
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto name_len = take<std::uint32_t>(in);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len))
      throw DataError("truncated checkpoint record name");
    const auto rank = take<std::uint32_t>(in);
    if (rank > 8)
      throw DataError("implausible rank in checkpoint record " + name);
    Shape shape(rank);
    for (auto &d : shape)
      d = take<std::uint64_t>(in);
    std::vector<double> data(shape_numel(shape));
    for (double &v : data)
      v = take<double>(in);

    if (name == "optim/step") {
      optim.step = static_cast<std::uint64_t>(data.at(0));
    } else if (name.rfind("optim/m/", 0) == 0) {
      optim.m[name.substr(8)] = std::move(data);
    } else if (name.rfind("optim/v/", 0) == 0) {
      optim.v[name.substr(8)] = std::move(data);
    } else {
      ck.params.add(name, Tensor::from_data(std::move(shape), std::move(data),
                                            true));
    }
  }
  if (has_optim)
    ck.optim = std::move(optim);
  return ck;
}

}  // namespace equihg
