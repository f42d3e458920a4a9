//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "equihg/model.hpp"

#include <fmt/format.h>

#include "equihg/error.hpp"

namespace equihg {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
  case ModelKind::Equihgnn:
    return "equihgnn";
  case ModelKind::Mhnn:
    return "mhnn";
  case ModelKind::Gin:
    return "gin";
  }
  throw InvariantError("unknown model kind");
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "equihgnn")
    return ModelKind::Equihgnn;
  if (name == "mhnn")
    return ModelKind::Mhnn;
  if (name == "gin")
    return ModelKind::Gin;
  throw ConfigError(fmt::format(
      "unknown model kind '{}' (expected equihgnn, mhnn or gin)", name));
}

void ModelConfig::validate() const {
  if (hidden == 0)
    throw ConfigError("model.hidden must be positive");
  if (head_layers == 0)
    throw ConfigError("model.head_layers must be positive");
  if (max_neighbors == 0)
    throw ConfigError("model.max_neighbors must be positive");
  if (!(cutoff > 0.0))
    throw ConfigError("model.cutoff must be positive");
}

nlohmann::json ModelConfig::to_json() const {
  return {
    { "kind", std::string(to_string(kind)) },
    { "hidden", hidden },
    { "geo_layers", geo_layers },
    { "hg_layers", hg_layers },
    { "head_layers", head_layers },
    { "cutoff", cutoff },
    { "max_neighbors", max_neighbors },
    { "seed", seed },
  };
}

ModelConfig ModelConfig::from_json(const nlohmann::json &j) {
  try {
    ModelConfig c;
    c.kind = model_kind_from_string(j.at("kind").get<std::string>());
    c.hidden = j.at("hidden").get<std::size_t>();
    c.geo_layers = j.at("geo_layers").get<std::size_t>();
    c.hg_layers = j.at("hg_layers").get<std::size_t>();
    c.head_layers = j.at("head_layers").get<std::size_t>();
    c.cutoff = j.at("cutoff").get<double>();
    c.max_neighbors = j.at("max_neighbors").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("bad model metadata: ") + e.what());
  }
}

GraphSample prepare_sample(const Molecule &raw, const ModelConfig &cfg) {
  const Molecule mol = perceive_conjugation(raw);
  GraphSample s;
  s.num_atoms = mol.num_atoms();
  const Tensor f = atom_features(mol);
  s.features.assign(f.data().begin(), f.data().end());
  s.bipartite = to_bipartite(build_hypergraph(mol));
  for (const Bond &b : mol.bonds)
    s.bonds.emplace_back(b.a, b.b);
  if (mol.coords) {
    s.coords = *mol.coords;
    if (cfg.kind == ModelKind::Equihgnn)
      s.radius = build_radius_graph(s.coords, cfg.cutoff, cfg.max_neighbors);
  }
  return s;
}

Batch make_batch(std::span<const GraphSample *const> samples) {
  Batch b;
  b.num_graphs = samples.size();
  std::vector<double> feats;
  for (std::size_t g = 0; g < samples.size(); ++g) {
    const GraphSample *s = samples[g];
    const std::size_t node0 = b.num_nodes;
    const std::size_t edge0 = b.num_hyperedges;
    feats.insert(feats.end(), s->features.begin(), s->features.end());
    if (s->coords.size() != s->num_atoms)
      b.has_coords = false;
    else
      b.coords.insert(b.coords.end(), s->coords.begin(), s->coords.end());
    for (const auto &[i, j] : s->radius.edges)
      b.radius.edges.emplace_back(node0 + i, node0 + j);
    for (const Incidence &inc : s->bipartite.incidence) {
      b.inc_vertex.push_back(node0 + inc.vertex);
      b.inc_edge.push_back(edge0 + inc.edge);
    }
    for (const auto &[i, j] : s->bonds) {
      b.bond_src.push_back(node0 + i);
      b.bond_dst.push_back(node0 + j);
      b.bond_src.push_back(node0 + j);
      b.bond_dst.push_back(node0 + i);
    }
    b.node_graph.insert(b.node_graph.end(), s->num_atoms, g);
    b.edge_graph.insert(b.edge_graph.end(), s->bipartite.num_edge_nodes, g);
    b.num_nodes += s->num_atoms;
    b.num_hyperedges += s->bipartite.num_edge_nodes;
  }
  if (!b.has_coords)
    b.coords.clear();
  b.features = Tensor::from_data({ b.num_nodes, kAtomFeatureDim },
                                 std::move(feats));
  return b;
}

Batch make_batch(const GraphSample &sample) {
  const GraphSample *one[] = { &sample };
  return make_batch(one);
}

namespace {

void build(ParamBuilder &b, const ModelConfig &cfg, GeoEncoder &geo,
           Linear &z_init, std::vector<AllSetLayer> &hg,
           std::vector<Mlp> &gin_mlp, std::vector<Tensor> &gin_eps, Mlp &head) {
  const std::size_t d = cfg.hidden;
  geo.embed = b.linear("embed", kAtomFeatureDim, d);
  std::size_t head_in = d;
  if (cfg.kind == ModelKind::Gin) {
    for (std::size_t i = 0; i < cfg.hg_layers; ++i) {
      const std::string name = fmt::format("gin.layer{}", i);
      gin_mlp.push_back(b.mlp(name + ".mlp", { d, d, d }));
      gin_eps.push_back(b.scalar(name + ".eps", 0.0));
    }
  } else {
    if (cfg.kind == ModelKind::Equihgnn)
      for (std::size_t i = 0; i < cfg.geo_layers; ++i)
        geo.layers.push_back(
            make_egnn_layer(b, fmt::format("geo.layer{}", i), d));
    z_init = b.linear("hg.z_init", d, d);
    for (std::size_t i = 0; i < cfg.hg_layers; ++i)
      hg.push_back(make_allset_layer(b, fmt::format("hg.layer{}", i), d));
    head_in = 2 * d;
  }
  std::vector<std::size_t> dims{ head_in };
  for (std::size_t i = 1; i < cfg.head_layers; ++i)
    dims.push_back(d);
  dims.push_back(1);
  head = b.mlp("head", dims);
}

}  // namespace

Model::Model(const ModelConfig &cfg, ParameterSet params, bool fresh)
    : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
  if (fresh) {
    ParamBuilder b = ParamBuilder::create(params_, cfg_.seed);
    build(b, cfg_, geo_, z_init_, hg_, gin_mlp_, gin_eps_, head_);
    return;
  }
  ParamBuilder b = ParamBuilder::bind(params_);
  build(b, cfg_, geo_, z_init_, hg_, gin_mlp_, gin_eps_, head_);
  ParameterSet expected;
  GeoEncoder g;
  Linear z;
  std::vector<AllSetLayer> h;
  std::vector<Mlp> gm;
  std::vector<Tensor> ge;
  Mlp hd;
  ParamBuilder probe = ParamBuilder::create(expected, 0);
  build(probe, cfg_, g, z, h, gm, ge, hd);
  if (expected.size() != params_.size())
    throw Error(fmt::format("parameter set has {} tensors, a {} model needs {}",
                            params_.size(), to_string(cfg_.kind),
                            expected.size()));
}

Model Model::create(const ModelConfig &cfg) {
  return Model(cfg, ParameterSet{}, true);
}

Model Model::from_params(const ModelConfig &cfg, ParameterSet params) {
  return Model(cfg, std::move(params), false);
}

Model Model::clone() const { return from_params(cfg_, params_.clone()); }

Tensor Model::hypergraph_head(Tensor x0, const Batch &batch) const {
  HgState s = make_hg_state(std::move(x0), batch.inc_vertex, batch.inc_edge,
                            batch.num_hyperedges, z_init_);
  for (const AllSetLayer &layer : hg_)
    s = allset_layer_forward(s, layer);
  const Tensor y = hg_readout(s, head_, batch.node_graph, batch.edge_graph,
                              batch.num_graphs);
  return reshape(y, { batch.num_graphs });
}

Tensor forward_equihgnn(const Model &m, const Batch &batch) {
  if (m.cfg_.kind != ModelKind::Equihgnn)
    throw InvariantError("forward_equihgnn called on a different model kind");
  if (!batch.has_coords)
    throw Error("equihgnn needs 3D coordinates for every molecule");
  const GeoState g = m.geo_.run(batch.features, batch.coords, batch.radius);
  return m.hypergraph_head(g.h, batch);
}

Tensor forward_mhnn(const Model &m, const Batch &batch) {
  if (m.cfg_.kind != ModelKind::Mhnn)
    throw InvariantError("forward_mhnn called on a different model kind");
  return m.hypergraph_head(m.geo_.embed(batch.features), batch);
}

Tensor forward_gin(const Model &m, const Batch &batch) {
  if (m.cfg_.kind != ModelKind::Gin)
    throw InvariantError("forward_gin called on a different model kind");
  const std::size_t n = batch.num_nodes;
  Tensor h = m.geo_.embed(batch.features);
  for (std::size_t i = 0; i < m.gin_mlp_.size(); ++i) {
    const Tensor agg = scatter_sum(gather(h, batch.bond_dst), batch.bond_src, n);
    const Tensor self = mul(h, add_scalar(m.gin_eps_[i], 1.0));
    h = m.gin_mlp_[i](add(self, agg));
  }
  const Tensor pooled = scatter_sum(h, batch.node_graph, batch.num_graphs);
  return reshape(m.head_(pooled), { batch.num_graphs });
}

Tensor Model::forward(const Batch &batch) const {
  switch (cfg_.kind) {
  case ModelKind::Equihgnn:
    return forward_equihgnn(*this, batch);
  case ModelKind::Mhnn:
    return forward_mhnn(*this, batch);
  case ModelKind::Gin:
    return forward_gin(*this, batch);
  }
  throw InvariantError("unknown model kind");
}

double Model::predict(const Molecule &mol) const {
  NoTapeScope no_tape;
  return forward(make_batch(prepare_sample(mol, cfg_))).item();
}

std::vector<double> Model::predict(std::span<const GraphSample> samples,
                                   std::size_t batch_size) const {
  NoTapeScope no_tape;
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    std::vector<const GraphSample *> group;
    for (std::size_t i = start;
         i < std::min(samples.size(), start + batch_size); ++i)
      group.push_back(&samples[i]);
    const Tensor y = forward(make_batch(group));
    out.insert(out.end(), y.data().begin(), y.data().end());
  }
  return out;
}

}  // namespace equihg
