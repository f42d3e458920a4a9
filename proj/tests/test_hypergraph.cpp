//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "equihg/checks.hpp"
#include "equihg/chemio.hpp"
#include "equihg/error.hpp"
#include "equihg/hypergraph.hpp"

using namespace equihg;

namespace {

std::size_t conjugated_count(const Molecule &m) {
  return std::count_if(m.bonds.begin(), m.bonds.end(),
                       [](const Bond &b) { return b.conjugated; });
}

Hypergraph random_hypergraph(std::mt19937_64 &rng) {
  std::uniform_int_distribution<std::size_t> nv(1, 30);
  const std::size_t n = nv(rng);
  std::uniform_int_distribution<std::size_t> ne(0, 8), pick(0, n - 1);
  std::vector<std::vector<std::size_t>> edges(ne(rng));
  for (auto &e : edges) {
    std::uniform_int_distribution<std::size_t> size(1, n);
    const std::size_t k = size(rng);
    for (std::size_t i = 0; i < k; ++i)
      e.push_back(pick(rng));
  }
  return Hypergraph(n, edges);
}

}  // namespace

TEST(Conjugation, EthaneHasNone) {
  EXPECT_EQ(conjugated_count(perceive_conjugation(parse_smiles("CC"))), 0u);
}

TEST(Conjugation, ButadieneAllCarbonBonds) {
  const Molecule m = perceive_conjugation(parse_smiles("C=CC=C"));
  for (const Bond &b : m.bonds) {
    const bool heavy = b.a < 4 && b.b < 4;
    EXPECT_EQ(b.conjugated, heavy) << b.a << "-" << b.b;
  }
}

TEST(Conjugation, BenzeneRing) {
  const Molecule m = perceive_conjugation(parse_smiles("c1ccccc1"));
  EXPECT_EQ(conjugated_count(m), 6u);
}

TEST(Conjugation, IsolatedAndSkippedDoubleBonds) {
  EXPECT_EQ(conjugated_count(perceive_conjugation(parse_smiles("C=C"))), 0u);
  EXPECT_EQ(conjugated_count(perceive_conjugation(parse_smiles("C=CCC=C"))),
            0u);
  EXPECT_EQ(conjugated_count(perceive_conjugation(parse_smiles("C=C=C"))), 2u);
}

TEST(Conjugation, MatchesToolkitCorpus) {
  std::ifstream in(std::string(EQUIHG_DATA_DIR) + "/conjugation_corpus.json");
  ASSERT_TRUE(in);
  const auto corpus = nlohmann::json::parse(in);
  ASSERT_EQ(corpus["molecules"].size(), 50u);
  for (const auto &entry : corpus["molecules"]) {
    const std::string smi = entry["smiles"];
    const Molecule m = perceive_conjugation(parse_smiles(smi));
    EXPECT_EQ(m.num_atoms(), entry["num_atoms"].get<std::size_t>()) << smi;
    EXPECT_EQ(m.num_bonds(), entry["num_bonds"].get<std::size_t>()) << smi;
    for (const auto &flag : entry["heavy_bonds"]) {
      const std::size_t a = flag[0], b = flag[1];
      const auto it = std::find_if(m.bonds.begin(), m.bonds.end(),
                                   [&](const Bond &x) {
                                     return std::min(x.a, x.b) == a
                                            && std::max(x.a, x.b) == b;
                                   });
      ASSERT_NE(it, m.bonds.end()) << smi << " " << a << "-" << b;
      EXPECT_EQ(it->conjugated, flag[2].get<bool>())
          << smi << " " << a << "-" << b;
    }
    const auto expected =
        entry["hyperedges"].get<std::vector<std::vector<std::size_t>>>();
    EXPECT_EQ(build_hypergraph(m).hyperedges(), expected) << smi;
  }
}

TEST(Hypergraph, BenzeneOneHyperedge) {
  const Hypergraph h =
      build_hypergraph(perceive_conjugation(parse_smiles("c1ccccc1")));
  EXPECT_EQ(h.num_vertices(), 12u);
  ASSERT_EQ(h.num_hyperedges(), 1u);
  EXPECT_EQ(h.hyperedges()[0], (std::vector<std::size_t>{ 0, 1, 2, 3, 4, 5 }));
  EXPECT_EQ(h.to_json(),
            R"({"num_vertices":12,"hyperedges":[[0,1,2,3,4,5]]})");
}

TEST(Hypergraph, EthaneNoHyperedges) {
  const Hypergraph h =
      build_hypergraph(perceive_conjugation(parse_smiles("CC")));
  EXPECT_EQ(h.num_vertices(), 8u);
  EXPECT_EQ(h.num_hyperedges(), 0u);
}

TEST(Hypergraph, SeparatedRingsGiveTwoHyperedges) {
  const Hypergraph h = build_hypergraph(
      perceive_conjugation(parse_smiles("c1ccccc1Cc1ccccc1")));
  ASSERT_EQ(h.num_hyperedges(), 2u);
  EXPECT_EQ(h.hyperedges()[0].size(), 6u);
  EXPECT_EQ(h.hyperedges()[1].front(), 7u);
}

TEST(Hypergraph, ConstructorNormalizes) {
  const Hypergraph h(4, { { 2, 1 }, { 1, 2 }, { 3 } });
  ASSERT_EQ(h.num_hyperedges(), 2u);
  EXPECT_EQ(h.hyperedges()[0], (std::vector<std::size_t>{ 1, 2 }));
  EXPECT_THROW(Hypergraph(3, { {} }), InvariantError);
  EXPECT_THROW(Hypergraph(3, { { 3 } }), InvariantError);
}

TEST(Hypergraph, RelabelingCommutesWithConstruction) {
  std::mt19937_64 rng(5);
  const Molecule base = parse_smiles("O=CC=Cc1ccccc1");
  const Hypergraph h = build_hypergraph(perceive_conjugation(base));
  for (int trial = 0; trial < 200; ++trial) {
    const auto perm = random_permutation(base.num_atoms(), rng);
    std::vector<std::size_t> inverse(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
      inverse[perm[i]] = i;
    const Hypergraph hp =
        build_hypergraph(perceive_conjugation(base.permuted(perm)));
    std::set<std::vector<std::size_t>> expect, got;
    for (const auto &e : h.hyperedges()) {
      std::vector<std::size_t> mapped;
      for (std::size_t v : e)
        mapped.push_back(inverse[v]);
      std::sort(mapped.begin(), mapped.end());
      expect.insert(mapped);
    }
    for (const auto &e : hp.hyperedges())
      got.insert(e);
    ASSERT_EQ(got, expect);
  }
}

TEST(Bipartite, SmallExample) {
  const BipartiteGraph b = to_bipartite(Hypergraph(3, { { 0, 1 }, { 1, 2 } }));
  EXPECT_EQ(b.num_vertex_nodes, 3u);
  EXPECT_EQ(b.num_edge_nodes, 2u);
  const std::vector<Incidence> expect{ { 0, 0 }, { 1, 0 }, { 1, 1 }, { 2, 1 } };
  EXPECT_EQ(b.incidence, expect);
}

TEST(Bipartite, EmptyAndSingleEdge) {
  const BipartiteGraph none = to_bipartite(Hypergraph(4, {}));
  EXPECT_EQ(none.num_edge_nodes, 0u);
  EXPECT_TRUE(none.incidence.empty());
  const BipartiteGraph one = to_bipartite(Hypergraph(3, { { 0, 1, 2 } }));
  ASSERT_EQ(one.incidence.size(), 3u);
  for (const Incidence &i : one.incidence)
    EXPECT_EQ(i.edge, 0u);
}

TEST(Bipartite, RoundTripRandom) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const Hypergraph h = random_hypergraph(rng);
    ASSERT_EQ(from_bipartite(to_bipartite(h)), h);
  }
}

TEST(RadiusGraph, FarApartHasNoEdges) {
  const std::vector<Vec3> x{ { 0, 0, 0 }, { 6, 0, 0 } };
  EXPECT_TRUE(build_radius_graph(x, 5.0, 16).edges.empty());
}

TEST(RadiusGraph, CollinearTriple) {
  const std::vector<Vec3> x{ { 0, 0, 0 }, { 1, 0, 0 }, { 2, 0, 0 } };
  const RadiusGraph g = build_radius_graph(x, 5.0, 16);
  EXPECT_EQ(g.edges.size(), 6u);
  const std::set<std::pair<std::size_t, std::size_t>> edges(g.edges.begin(),
                                                            g.edges.end());
  EXPECT_EQ(edges.size(), 6u);
}

TEST(RadiusGraph, NeighbourCapKeepsNearest) {
  std::vector<Vec3> x{ { 0, 0, 0 } };
  for (int k = 1; k <= 18; ++k)
    x.push_back({ 0.2 * k, 0.05 * (k % 3), 0.0 });
  const RadiusGraph g = build_radius_graph(x, 5.0, 16);
  std::vector<std::size_t> out;
  for (const auto &[i, j] : g.edges)
    if (i == 0)
      out.push_back(j);
  ASSERT_EQ(out.size(), 16u);
  std::sort(out.begin(), out.end());
  for (std::size_t k = 0; k < 16; ++k)
    EXPECT_EQ(out[k], k + 1);
  std::map<std::size_t, std::size_t> degree;
  for (const auto &[i, j] : g.edges)
    ++degree[i];
  for (const auto &[node, d] : degree)
    EXPECT_LE(d, 16u);
}

TEST(RadiusGraph, TiesBreakBySmallerIndex) {
  std::vector<Vec3> x{ { 0, 0, 0 }, { 1, 0, 0 }, { -1, 0, 0 }, { 0, 1, 0 } };
  const RadiusGraph g = build_radius_graph(x, 5.0, 2);
  std::vector<std::size_t> out;
  for (const auto &[i, j] : g.edges)
    if (i == 0)
      out.push_back(j);
  std::sort(out.begin(), out.end());
  EXPECT_EQ(out, (std::vector<std::size_t>{ 1, 2 }));
}

TEST(RadiusGraph, CandidacyIsSymmetricAndWithinCutoff) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-4, 4);
  std::vector<Vec3> x(25);
  for (Vec3 &p : x)
    for (double &c : p)
      c = u(rng);
  const RadiusGraph g = build_radius_graph(x, 5.0, 1000);
  const std::set<std::pair<std::size_t, std::size_t>> edges(g.edges.begin(),
                                                            g.edges.end());
  for (const auto &[i, j] : g.edges) {
    EXPECT_TRUE(edges.count({ j, i }));
    double d2 = 0;
    for (int c = 0; c < 3; ++c)
      d2 += (x[i][c] - x[j][c]) * (x[i][c] - x[j][c]);
    EXPECT_LE(std::sqrt(d2), 5.0);
  }
}

TEST(RadiusGraph, RigidMotionLeavesEdgesUnchanged) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<Vec3> x(29);
  for (Vec3 &p : x)
    for (double &c : p)
      c = u(rng);
  const RadiusGraph g = build_radius_graph(x, 5.0, 16);
  for (int k = 0; k < 20; ++k) {
    const RigidMotion m = random_rigid_motion(rng);
    std::vector<Vec3> y;
    for (const Vec3 &p : x)
      y.push_back(m.apply(p));
    EXPECT_EQ(build_radius_graph(y, 5.0, 16).edges, g.edges);
  }
}

TEST(RadiusGraph, RejectsBadArguments) {
  const std::vector<Vec3> x{ { 0, 0, 0 }, { NAN, 0, 0 } };
  EXPECT_THROW(build_radius_graph(x, 5.0, 16), Error);
  const std::vector<Vec3> y{ { 0, 0, 0 } };
  EXPECT_THROW(build_radius_graph(y, 0.0, 16), Error);
  EXPECT_THROW(build_radius_graph(y, 5.0, 0), Error);
}
