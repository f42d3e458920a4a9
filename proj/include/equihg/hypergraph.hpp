//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "equihg/chem.hpp"

namespace equihg {

/// H = (V, E) with V = {0..num_vertices-1}. Hyperedges are sorted vertex
/// lists, never empty, never repeated.
class Hypergraph {
 public:
  Hypergraph() = default;

  /// Sorts each hyperedge and drops repeated hyperedges (first occurrence
  /// wins). Throws InvariantError on empty or out-of-range hyperedges.
  Hypergraph(std::size_t num_vertices,
             std::vector<std::vector<std::size_t>> hyperedges);

  std::size_t num_vertices() const { return num_vertices_; }
  std::size_t num_hyperedges() const { return hyperedges_.size(); }
  const std::vector<std::vector<std::size_t>> &hyperedges() const {
    return hyperedges_;
  }

  /// `{"num_vertices": N, "hyperedges": [[...], ...]}`
  std::string to_json() const;

  bool operator==(const Hypergraph &) const = default;

 private:
  std::size_t num_vertices_ = 0;
  std::vector<std::vector<std::size_t>> hyperedges_;
};

struct Incidence {
  std::size_t vertex;
  std::size_t edge;

  bool operator==(const Incidence &) const = default;
};

/// Vertex-nodes on one side, hyperedge-nodes on the other.
struct BipartiteGraph {
  std::size_t num_vertex_nodes = 0;
  std::size_t num_edge_nodes = 0;
  std::vector<Incidence> incidence;  // grouped by edge, vertices ascending
};

/// Flags every bond that belongs to a conjugated pi system.
///
/// Aromatic bonds are always conjugated. A single bond is conjugated when
/// both of its atoms carry another multiple bond. A multiple bond is
/// conjugated when it touches another multiple bond or a conjugated single
/// bond; an isolated C=C, C=O or C#N stays unconjugated. Atoms with four
/// or more neighbours never extend a pi system, and lone-pair donors
/// (phenol O, amide N) are not considered.
Molecule perceive_conjugation(const Molecule &mol);

/// One hyperedge per connected component of the conjugated-bond subgraph,
/// ordered by the smallest atom index in the component.
Hypergraph build_hypergraph(const Molecule &mol);

BipartiteGraph to_bipartite(const Hypergraph &h);

/// Inverse of to_bipartite up to hyperedge order (which it preserves).
Hypergraph from_bipartite(const BipartiteGraph &b);

struct RadiusGraph {
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (center, neighbor)
  double cutoff = 0;
  std::size_t max_neighbors = 0;
};

/// Directed k-nearest radius graph: for every atom i, the up to
/// `max_neighbors` closest atoms j != i with |x_i - x_j| <= cutoff. Ties in
/// distance go to the smaller index. Edges are grouped by center, nearest
/// first.
RadiusGraph build_radius_graph(std::span<const Vec3> coords, double cutoff,
                               std::size_t max_neighbors);

}  // namespace equihg
