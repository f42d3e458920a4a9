//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "equihg/geo.hpp"

#include <algorithm>

#include "equihg/error.hpp"

namespace equihg {

Tensor atom_features(const Molecule &mol) {
  const std::size_t n = mol.num_atoms();
  const auto degree = mol.degrees();
  std::vector<double> data(n * kAtomFeatureDim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double *row = data.data() + i * kAtomFeatureDim;
    const Atom &a = mol.atoms[i];
    row[static_cast<std::size_t>(a.element)] = 1.0;
    row[kNumElements] = a.aromatic ? 1.0 : 0.0;
    row[kNumElements + 1] = static_cast<double>(a.formal_charge);
    row[kNumElements + 2] = static_cast<double>(degree[i]);
  }
  return Tensor::from_data({ n, kAtomFeatureDim }, std::move(data));
}

GeoState make_geo_state(Tensor h, std::span<const Vec3> coords,
                        const RadiusGraph &graph) {
  GeoState s;
  s.h = std::move(h);
  std::vector<double> xs;
  xs.reserve(coords.size() * 3);
  for (const Vec3 &p : coords)
    xs.insert(xs.end(), p.begin(), p.end());
  s.x = Tensor::from_data({ coords.size(), 3 }, std::move(xs));
  for (const auto &[i, j] : graph.edges) {
    s.src.push_back(i);
    s.dst.push_back(j);
  }
  return s;
}

EgnnLayer make_egnn_layer(ParamBuilder &b, const std::string &name,
                          std::size_t hidden) {
  EgnnLayer l;
  l.edge_mlp = b.mlp(name + ".edge", { 2 * hidden + 1, hidden, hidden });
  l.node_mlp = b.mlp(name + ".node", { 2 * hidden, hidden, hidden });
  l.coord_mlp = b.mlp(name + ".coord", { hidden, hidden, 1 });
  return l;
}

GeoState egnn_layer_forward(const GeoState &state, const EgnnLayer &layer) {
  const std::size_t n = state.h.dim(0);
  const std::size_t d = state.h.dim(1);
  const std::size_t e = state.src.size();
  if (state.x.dim(0) != n)
    throw ShapeError("egnn: coordinate rows do not match node rows");

  // The first edge layer acts on [h_i, h_j, d2]; splitting its weight lets
  // the two node blocks run once per node instead of once per edge.
  const Linear &first = layer.edge_mlp.layers.front();
  if (first.in_dim() != 2 * d + 1)
    throw ShapeError("egnn: edge MLP expects input width 2d+1");
  const Tensor w_center = narrow(first.weight, 1, 0, d);
  const Tensor w_neighbor = narrow(first.weight, 1, d, d);
  const Tensor w_dist = narrow(first.weight, 1, 2 * d, 1);

  const Tensor diff = sub(gather(state.x, state.src), gather(state.x, state.dst));
  const Tensor dist2 = reshape(sum(square(diff), 1), { e, 1 });

  const Tensor per_center = linear(state.h, w_center, first.bias);
  const Tensor per_neighbor = linear(state.h, w_neighbor);
  Tensor pre = add(add(gather(per_center, state.src),
                       gather(per_neighbor, state.dst)),
                   linear(dist2, w_dist));
  Tensor message = layer.edge_mlp.layers.size() == 1
                       ? pre
                       : layer.edge_mlp.forward_from(
                           1, activate(pre, layer.edge_mlp.activation));

  const Tensor aggregated = scatter_sum(message, state.src, n);

  GeoState out;
  out.src = state.src;
  out.dst = state.dst;
  out.h = add(state.h, layer.node_mlp(concat({ state.h, aggregated }, 1)));

  std::vector<double> inv_degree(n, 0.0);
  {
    std::vector<std::size_t> deg(n, 0);
    for (std::size_t i : state.src)
      ++deg[i];
    for (std::size_t i = 0; i < n; ++i)
      inv_degree[i] = 1.0 / static_cast<double>(std::max<std::size_t>(1, deg[i]));
  }
  const Tensor gate = div(layer.coord_mlp(message), add_scalar(sqrt(dist2), 1.0));
  const Tensor shift = scatter_sum(mul(diff, gate), state.src, n);
  out.x = add(state.x,
              mul(shift, Tensor::from_data({ n, 1 }, std::move(inv_degree))));
  return out;
}

GeoEncoder make_geo_encoder(ParamBuilder &b, const std::string &name,
                            std::size_t hidden, std::size_t num_layers) {
  GeoEncoder enc;
  enc.embed = b.linear(name + ".embed", kAtomFeatureDim, hidden);
  for (std::size_t i = 0; i < num_layers; ++i)
    enc.layers.push_back(
        make_egnn_layer(b, name + ".layer" + std::to_string(i), hidden));
  return enc;
}

GeoState GeoEncoder::run(GeoState state) const {
  for (const EgnnLayer &layer : layers)
    state = egnn_layer_forward(state, layer);
  return state;
}

GeoState GeoEncoder::run(const Tensor &raw_features,
                         std::span<const Vec3> coords,
                         const RadiusGraph &graph) const {
  return run(make_geo_state(embed(raw_features), coords, graph));
}

GeoState encode_state(const Molecule &mol, const GeoEncoder &encoder,
                      double cutoff, std::size_t max_neighbors) {
  if (!mol.coords)
    throw Error("molecule '" + mol.name + "' has no 3D coordinates");
  const RadiusGraph graph = build_radius_graph(*mol.coords, cutoff,
                                               max_neighbors);
  return encoder.run(atom_features(mol), *mol.coords, graph);
}

Tensor encode(const Molecule &mol, const GeoEncoder &encoder, double cutoff,
              std::size_t max_neighbors) {
  return encode_state(mol, encoder, cutoff, max_neighbors).h;
}

}  // namespace equihg
