//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "equihg/allset.hpp"

#include "equihg/error.hpp"

namespace equihg {

Tensor pool_vertices(const Tensor &x, std::span<const std::size_t> inc_vertex,
                     std::span<const std::size_t> inc_edge,
                     std::size_t num_edges) {
  if (inc_vertex.size() != inc_edge.size())
    throw InvariantError("incidence lists differ in length");
  return scatter_sum(gather(x, inc_vertex), inc_edge, num_edges);
}

HgState make_hg_state(Tensor x, std::vector<std::size_t> inc_vertex,
                      std::vector<std::size_t> inc_edge, std::size_t num_edges,
                      const Linear &z_init) {
  HgState s;
  s.z = z_init(pool_vertices(x, inc_vertex, inc_edge, num_edges));
  s.x = std::move(x);
  s.inc_vertex = std::move(inc_vertex);
  s.inc_edge = std::move(inc_edge);
  return s;
}

HgState make_hg_state(Tensor x, const BipartiteGraph &graph,
                      const Linear &z_init) {
  if (x.dim(0) != graph.num_vertex_nodes)
    throw ShapeError("hypergraph state: feature rows do not match vertices");
  std::vector<std::size_t> vs, es;
  vs.reserve(graph.incidence.size());
  es.reserve(graph.incidence.size());
  for (const Incidence &inc : graph.incidence) {
    vs.push_back(inc.vertex);
    es.push_back(inc.edge);
  }
  return make_hg_state(std::move(x), std::move(vs), std::move(es),
                       graph.num_edge_nodes, z_init);
}

AllSetLayer make_allset_layer(ParamBuilder &b, const std::string &name,
                              std::size_t hidden) {
  AllSetLayer l;
  l.v2e_pre = b.mlp(name + ".v2e_pre", { hidden, hidden, hidden });
  l.v2e_post = b.mlp(name + ".v2e_post", { 2 * hidden, hidden, hidden });
  l.e2v_pre = b.mlp(name + ".e2v_pre", { hidden, hidden, hidden });
  l.e2v_post = b.mlp(name + ".e2v_post", { 2 * hidden, hidden, hidden });
  return l;
}

Tensor v2e(const HgState &s, const AllSetLayer &layer) {
  const Tensor members = layer.v2e_pre(gather(s.x, s.inc_vertex));
  const Tensor pooled = scatter_sum(members, s.inc_edge, s.num_edges());
  return layer.v2e_post(concat({ s.z, pooled }, 1));
}

Tensor e2v(const HgState &s, const AllSetLayer &layer) {
  const Tensor owners = layer.e2v_pre(gather(s.z, s.inc_edge));
  const Tensor pooled = scatter_sum(owners, s.inc_vertex, s.num_vertices());
  return layer.e2v_post(concat({ s.x, pooled }, 1));
}

HgState allset_layer_forward(const HgState &state, const AllSetLayer &layer) {
  HgState out;
  out.inc_vertex = state.inc_vertex;
  out.inc_edge = state.inc_edge;
  out.x = state.x;
  out.z = v2e(state, layer);
  out.x = e2v(out, layer);
  return out;
}

Tensor hg_readout(const HgState &state, const Mlp &head,
                  std::span<const std::size_t> node_graph,
                  std::span<const std::size_t> edge_graph,
                  std::size_t num_graphs) {
  if (node_graph.size() != state.num_vertices() ||
      edge_graph.size() != state.num_edges())
    throw InvariantError("readout: graph index does not cover every node");
  const Tensor xs = scatter_sum(state.x, node_graph, num_graphs);
  const Tensor zs = scatter_sum(state.z, edge_graph, num_graphs);
  return head(concat({ xs, zs }, 1));
}

}  // namespace equihg
