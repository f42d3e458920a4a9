//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "equihg/tensor.hpp"

namespace equihg {

/// Ordered, named collection of trainable tensors.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  Tensor &add(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  Tensor &get(std::string_view name);
  const Tensor &get(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t num_scalars() const;
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::vector<Tensor> tensors() const;
  void zero_grad();

  /// Deep copy with fresh storage and no gradients.
  ParameterSet clone() const;
  void copy_values_from(const ParameterSet &other);
  /// Adds other's gradients into ours, parameter by parameter.
  void add_grads_from(const ParameterSet &other);

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class Activation { Silu, Relu };

Tensor activate(const Tensor &x, Activation act);

struct Linear {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]

  std::size_t in_dim() const { return weight.dim(1); }
  std::size_t out_dim() const { return weight.dim(0); }
  Tensor operator()(const Tensor &x) const { return linear(x, weight, bias); }
};

/// Linear layers with the activation between them (not after the last).
struct Mlp {
  std::vector<Linear> layers;
  Activation activation = Activation::Silu;

  Tensor operator()(const Tensor &x) const { return forward_from(0, x); }
  /// Runs layers[first..] on x, where x is the input of layers[first].
  Tensor forward_from(std::size_t first, const Tensor &x) const;
};

/// Describes a model's parameters once and either creates them (seeded
/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases) or binds
/// to an existing set, checking shapes.
class ParamBuilder {
 public:
  static ParamBuilder create(ParameterSet &params, std::uint64_t seed);
  static ParamBuilder bind(ParameterSet &params);

  Linear linear(const std::string &name, std::size_t in, std::size_t out);
  Mlp mlp(const std::string &name, std::span<const std::size_t> dims,
          Activation act = Activation::Silu);
  Mlp mlp(const std::string &name, std::initializer_list<std::size_t> dims,
          Activation act = Activation::Silu);
  Tensor scalar(const std::string &name, double init);

 private:
  ParamBuilder(ParameterSet &params, std::optional<std::uint64_t> seed)
      : params_(&params), seed_(seed) { }

  Tensor tensor(const std::string &name, Shape shape, double bound);

  ParameterSet *params_;
  std::optional<std::uint64_t> seed_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

/// One bias-corrected Adam update from the parameters' accumulated grads.
/// A missing gradient counts as zero. Throws NumericError (leaving params
/// and state untouched) when any gradient is non-finite.
void adam_step(ParameterSet &params, AdamState &state);

/// Mean squared error; both inputs must hold the same number of values.
Tensor mse_loss(const Tensor &pred, const Tensor &target);

double mae_metric(std::span<const double> pred, std::span<const double> target);

/// Binary checkpoint: magic `EQHG1`, a JSON metadata block, then named
/// float64 records. Adam moments are stored as `optim/m/<name>`,
/// `optim/v/<name>` and `optim/step`.
struct Checkpoint {
  nlohmann::json meta;
  ParameterSet params;
  std::optional<AdamState> optim;
};

void save_checkpoint(const std::filesystem::path &path,
                     const nlohmann::json &meta, const ParameterSet &params,
                     const AdamState *optim = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path &path);

}  // namespace equihg
