//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "equihg/allset.hpp"
#include "equihg/chem.hpp"
#include "equihg/geo.hpp"
#include "equihg/hypergraph.hpp"
#include "equihg/nn.hpp"
#include "equihg/tensor.hpp"

namespace equihg {

enum class ModelKind { Equihgnn, Mhnn, Gin };

std::string_view to_string(ModelKind kind);
/// Throws ConfigError for unknown names.
ModelKind model_kind_from_string(std::string_view name);

struct ModelConfig {
  ModelKind kind = ModelKind::Equihgnn;
  std::size_t hidden = 256;
  std::size_t geo_layers = 2;
  std::size_t hg_layers = 2;  // also the GIN depth
  std::size_t head_layers = 2;
  double cutoff = 5.0;
  std::size_t max_neighbors = 16;
  std::uint64_t seed = 0;

  /// Throws ConfigError on non-positive widths or cutoff.
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json &j);

  bool operator==(const ModelConfig &) const = default;
};

/// Per-molecule inputs derived once: raw features, perceived hypergraph,
/// radius graph (when coordinates are present) and the bond list.
struct GraphSample {
  std::size_t num_atoms = 0;
  std::vector<double> features;  // [num_atoms, kAtomFeatureDim]
  std::vector<Vec3> coords;      // empty when the molecule has none
  RadiusGraph radius;
  BipartiteGraph bipartite;
  std::vector<std::pair<std::size_t, std::size_t>> bonds;
};

GraphSample prepare_sample(const Molecule &mol, const ModelConfig &cfg);

/// Several samples concatenated into one disjoint graph.
struct Batch {
  std::size_t num_graphs = 0;
  std::size_t num_nodes = 0;
  std::size_t num_hyperedges = 0;
  bool has_coords = true;
  Tensor features;  // [num_nodes, kAtomFeatureDim]
  std::vector<Vec3> coords;
  RadiusGraph radius;
  std::vector<std::size_t> inc_vertex, inc_edge;
  std::vector<std::size_t> bond_src, bond_dst;  // both directions
  std::vector<std::size_t> node_graph, edge_graph;
};

Batch make_batch(std::span<const GraphSample *const> samples);
Batch make_batch(const GraphSample &sample);

/// A predictor bound to its parameter set. Copying is disabled since the
/// bound layers alias the parameters; use clone() for an independent copy.
class Model {
 public:
  /// Fresh parameters from the given seed.
  static Model create(const ModelConfig &cfg);
  /// Binds to existing parameters, checking names and shapes.
  static Model from_params(const ModelConfig &cfg, ParameterSet params);

  Model(Model &&) = default;
  Model &operator=(Model &&) = default;
  Model(const Model &) = delete;
  Model &operator=(const Model &) = delete;

  Model clone() const;

  const ModelConfig &config() const { return cfg_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }
  const GeoEncoder &geo() const { return geo_; }

  /// One prediction per graph, shape [G].
  Tensor forward(const Batch &batch) const;
  double predict(const Molecule &mol) const;
  std::vector<double> predict(std::span<const GraphSample> samples,
                              std::size_t batch_size = 64) const;

  friend Tensor forward_equihgnn(const Model &model, const Batch &batch);
  friend Tensor forward_mhnn(const Model &model, const Batch &batch);
  friend Tensor forward_gin(const Model &model, const Batch &batch);

 private:
  Model(const ModelConfig &cfg, ParameterSet params, bool fresh);

  Tensor hypergraph_head(Tensor x0, const Batch &batch) const;

  ModelConfig cfg_;
  ParameterSet params_;
  GeoEncoder geo_;  // embed only for mhnn and gin
  Linear z_init_;
  std::vector<AllSetLayer> hg_;
  std::vector<Mlp> gin_mlp_;
  std::vector<Tensor> gin_eps_;
  Mlp head_;
};

Tensor forward_equihgnn(const Model &model, const Batch &batch);
Tensor forward_mhnn(const Model &model, const Batch &batch);
Tensor forward_gin(const Model &model, const Batch &batch);

}  // namespace equihg
