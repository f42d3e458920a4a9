//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "equihg/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "equihg/error.hpp"

namespace equihg {

Hypergraph::Hypergraph(std::size_t num_vertices,
                       std::vector<std::vector<std::size_t>> hyperedges)
    : num_vertices_(num_vertices) {
  std::set<std::vector<std::size_t>> seen;
  for (auto &e : hyperedges) {
    if (e.empty())
      throw InvariantError("empty hyperedge");
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    if (e.back() >= num_vertices)
      throw InvariantError("hyperedge vertex out of range");
    if (seen.insert(e).second)
      hyperedges_.push_back(std::move(e));
  }
}

std::string Hypergraph::to_json() const {
  nlohmann::ordered_json j;
  j["num_vertices"] = num_vertices_;
  j["hyperedges"] = hyperedges_;
  return j.dump();
}

Molecule perceive_conjugation(const Molecule &mol) {
  Molecule out = mol;
  const std::size_t n = out.atoms.size();

  // Atoms with four or more neighbours (sulfones, phosphates, ammonium)
  // cannot carry a delocalised pi system.
  const auto degree = out.degrees();
  std::vector<int> multiple(n, 0);
  for (const Bond &b : out.bonds) {
    if (is_multiple(b.order)) {
      if (degree[b.a] <= 3)
        ++multiple[b.a];
      if (degree[b.b] <= 3)
        ++multiple[b.b];
    }
  }

  std::vector<bool> touches_conj_single(n, false);
  for (Bond &b : out.bonds) {
    if (b.order == BondOrder::Aromatic) {
      b.conjugated = true;
    } else if (b.order == BondOrder::Single) {
      b.conjugated = multiple[b.a] > 0 && multiple[b.b] > 0;
      if (b.conjugated)
        touches_conj_single[b.a] = touches_conj_single[b.b] = true;
    }
  }

  for (Bond &b : out.bonds) {
    if (b.order != BondOrder::Double && b.order != BondOrder::Triple)
      continue;
    const bool cumulated = multiple[b.a] > 1 || multiple[b.b] > 1;
    b.conjugated = cumulated || touches_conj_single[b.a]
                   || touches_conj_single[b.b];
  }
  return out;
}

Hypergraph build_hypergraph(const Molecule &mol) {
  const std::size_t n = mol.atoms.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  std::vector<bool> in_system(n, false);
  for (const Bond &b : mol.bonds) {
    if (!b.conjugated)
      continue;
    in_system[b.a] = in_system[b.b] = true;
    std::size_t ra = find(b.a), rb = find(b.b);
    if (ra != rb)
      parent[std::max(ra, rb)] = std::min(ra, rb);
  }

  // Roots are the smallest index of their component, so visiting atoms in
  // order opens hyperedges in order of their smallest member.
  std::vector<std::vector<std::size_t>> edges;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t v = 0; v < n; ++v) {
    if (!in_system[v])
      continue;
    std::size_t r = find(v);
    if (slot[r] == n) {
      slot[r] = edges.size();
      edges.emplace_back();
    }
    edges[slot[r]].push_back(v);
  }
  return Hypergraph(n, std::move(edges));
}

BipartiteGraph to_bipartite(const Hypergraph &h) {
  BipartiteGraph b;
  b.num_vertex_nodes = h.num_vertices();
  b.num_edge_nodes = h.num_hyperedges();
  for (std::size_t e = 0; e < h.num_hyperedges(); ++e) {
    for (std::size_t v : h.hyperedges()[e])
      b.incidence.push_back({ v, e });
  }
  return b;
}

Hypergraph from_bipartite(const BipartiteGraph &b) {
  std::vector<std::vector<std::size_t>> edges(b.num_edge_nodes);
  for (const Incidence &inc : b.incidence) {
    if (inc.edge >= b.num_edge_nodes || inc.vertex >= b.num_vertex_nodes)
      throw InvariantError("incidence index out of range");
    edges[inc.edge].push_back(inc.vertex);
  }
  return Hypergraph(b.num_vertex_nodes, std::move(edges));
}

RadiusGraph build_radius_graph(std::span<const Vec3> coords, double cutoff,
                               std::size_t max_neighbors) {
  if (!(cutoff > 0) || !std::isfinite(cutoff))
    throw Error("radius cutoff must be positive");
  if (max_neighbors < 1)
    throw Error("max_neighbors must be at least 1");
  for (std::size_t i = 0; i < coords.size(); ++i) {
    for (double c : coords[i]) {
      if (!std::isfinite(c))
        throw Error("non-finite coordinate on atom " + std::to_string(i));
    }
  }

  RadiusGraph g;
  g.cutoff = cutoff;
  g.max_neighbors = max_neighbors;

  // Distances are bucketed to 1e-9 A before ranking so that rigid motions,
  // which perturb the last bits, cannot reorder exact ties.
  constexpr double kQuantum = 1e9;
  std::vector<std::tuple<long long, std::size_t>> cand;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    cand.clear();
    for (std::size_t j = 0; j < coords.size(); ++j) {
      if (j == i)
        continue;
      const double dx = coords[i][0] - coords[j][0];
      const double dy = coords[i][1] - coords[j][1];
      const double dz = coords[i][2] - coords[j][2];
      const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
      if (d <= cutoff)
        cand.emplace_back(std::llround(d * kQuantum), j);
    }
    std::sort(cand.begin(), cand.end());
    const std::size_t keep = std::min(cand.size(), max_neighbors);
    for (std::size_t k = 0; k < keep; ++k)
      g.edges.emplace_back(i, std::get<1>(cand[k]));
  }
  return g;
}

}  // namespace equihg
