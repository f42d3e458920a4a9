//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "equihg/hypergraph.hpp"
#include "equihg/nn.hpp"
#include "equihg/tensor.hpp"

namespace equihg {

/// Vertex and hyperedge features plus the incidence they are wired by.
/// Incidence k links vertex inc_vertex[k] with hyperedge inc_edge[k].
struct HgState {
  Tensor x;  // [N, d]
  Tensor z;  // [M, d]
  std::vector<std::size_t> inc_vertex;
  std::vector<std::size_t> inc_edge;

  std::size_t num_vertices() const { return x.dim(0); }
  std::size_t num_edges() const { return z.dim(0); }
};

/// Sum of member features per hyperedge, [M, d].
Tensor pool_vertices(const Tensor &x, std::span<const std::size_t> inc_vertex,
                     std::span<const std::size_t> inc_edge,
                     std::size_t num_edges);

/// Initial hyperedge features: a learned projection of the member sum.
HgState make_hg_state(Tensor x, const BipartiteGraph &graph,
                      const Linear &z_init);
HgState make_hg_state(Tensor x, std::vector<std::size_t> inc_vertex,
                      std::vector<std::size_t> inc_edge, std::size_t num_edges,
                      const Linear &z_init);

/// One AllSet block. Each direction is a permutation-invariant set function
/// post([self, sum(pre(members))]).
struct AllSetLayer {
  Mlp v2e_pre;   // d -> d -> d
  Mlp v2e_post;  // 2d -> d -> d
  Mlp e2v_pre;   // d -> d -> d
  Mlp e2v_post;  // 2d -> d -> d
};

AllSetLayer make_allset_layer(ParamBuilder &b, const std::string &name,
                              std::size_t hidden);

/// Updated hyperedge features from the current vertex features.
Tensor v2e(const HgState &state, const AllSetLayer &layer);
/// Updated vertex features from the current hyperedge features.
Tensor e2v(const HgState &state, const AllSetLayer &layer);

/// v2e followed by e2v on the refreshed hyperedges.
HgState allset_layer_forward(const HgState &state, const AllSetLayer &layer);

/// head([sum_v x_v, sum_e z_e]) per graph, [G, out]. node_graph and
/// edge_graph give the graph of every vertex and hyperedge.
Tensor hg_readout(const HgState &state, const Mlp &head,
                  std::span<const std::size_t> node_graph,
                  std::span<const std::size_t> edge_graph,
                  std::size_t num_graphs);

}  // namespace equihg
