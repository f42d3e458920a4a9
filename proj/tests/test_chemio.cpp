//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "equihg/chemio.hpp"
#include "equihg/error.hpp"

using namespace equihg;
namespace fs = std::filesystem;

namespace {

const char *kWater =
    "water\n"
    "  hand\n"
    "\n"
    "  3  2  0  0  0  0  0  0  0  0999 V2000\n"
    "    0.0000    0.0000    0.1173 O   0  0  0  0  0  0  0  0  0  0  0  0\n"
    "    0.0000    0.7572   -0.4692 H   0  0  0  0  0  0  0  0  0  0  0  0\n"
    "    0.0000   -0.7572   -0.4692 H   0  0  0  0  0  0  0  0  0  0  0  0\n"
    "  1  2  1  0\n"
    "  1  3  1  0\n"
    "M  END\n"
    "$$$$\n";

fs::path temp_dir(const std::string &name) {
  fs::path p = fs::temp_directory_path() / ("equihg_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path &p, const std::string &text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::size_t count_element(const Molecule &m, Element e) {
  return std::count_if(m.atoms.begin(), m.atoms.end(),
                       [e](const Atom &a) { return a.element == e; });
}

int standard_valence(Element e) {
  switch (e) {
  case Element::H:
  case Element::F:
  case Element::Cl:
  case Element::Br:
  case Element::I:
    return 1;
  case Element::O:
    return 2;
  case Element::N:
  case Element::B:
    return 3;
  default:
    return 4;
  }
}

}  // namespace

TEST(Sdf, ParsesWaterBlock) {
  const auto mols = parse_sdf(kWater);
  ASSERT_EQ(mols.size(), 1u);
  const Molecule &m = mols[0];
  EXPECT_EQ(m.name, "water");
  ASSERT_EQ(m.num_atoms(), 3u);
  EXPECT_EQ(m.atoms[0].element, Element::O);
  EXPECT_EQ(m.atoms[1].element, Element::H);
  ASSERT_EQ(m.num_bonds(), 2u);
  EXPECT_EQ(m.bonds[0].order, BondOrder::Single);
  EXPECT_EQ(m.bonds[1].b, 2u);
  ASSERT_TRUE(m.has_coords());
  EXPECT_DOUBLE_EQ((*m.coords)[1][1], 0.7572);
}

TEST(Sdf, EmptyInputGivesNoMolecules) {
  EXPECT_TRUE(parse_sdf("").empty());
  EXPECT_TRUE(parse_sdf("\n\n").empty());
}

TEST(Sdf, AtomCountMismatchReportsLine) {
  std::string text = kWater;
  text.replace(text.find("  3  2"), 6, "  5  2");
  try {
    parse_sdf(text);
    FAIL() << "expected a parse error";
  } catch (const ParseError &e) {
    EXPECT_GT(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(Sdf, RejectsUnknownElementAndV3000) {
  std::string bad = kWater;
  bad.replace(bad.find(" O  "), 4, " Xx ");
  EXPECT_THROW(parse_sdf(bad), ParseError);
  std::string v3 = kWater;
  v3.replace(v3.find("V2000"), 5, "V3000");
  EXPECT_THROW(parse_sdf(v3), ParseError);
}

TEST(Sdf, DuplicateBondIsAParseError) {
  std::string text = kWater;
  text.replace(text.find("  1  3  1  0"), 12, "  2  1  1  0");
  EXPECT_THROW(parse_sdf(text), ParseError);
}

TEST(Sdf, ChargeLinesOverrideAtomBlock) {
  Molecule m = parse_smiles("[NH4+]");
  m.coords = std::vector<Vec3>(m.num_atoms(), Vec3{ 0, 0, 0 });
  const std::string text = write_sdf(std::span(&m, 1));
  EXPECT_NE(text.find("M  CHG  1   1   1"), std::string::npos);
  const auto back = parse_sdf(text);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].atoms[0].formal_charge, 1);
}

TEST(Sdf, RoundTripPreservesStructure) {
  std::vector<Molecule> mols;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (const char *smi : { "c1ccccc1O", "CC(=O)[O-]", "C#N", "c1ccncc1",
                           "ClC=CBr" }) {
    Molecule m = parse_smiles(smi);
    std::vector<Vec3> xyz(m.num_atoms());
    for (Vec3 &p : xyz)
      for (double &c : p)
        c = std::round(u(rng) * 1e4) / 1e4;
    m.coords = xyz;
    mols.push_back(m);
  }
  const auto back = parse_sdf(write_sdf(mols));
  ASSERT_EQ(back.size(), mols.size());
  for (std::size_t i = 0; i < mols.size(); ++i) {
    EXPECT_EQ(back[i].atoms, mols[i].atoms) << mols[i].name;
    EXPECT_EQ(back[i].bonds, mols[i].bonds) << mols[i].name;
    EXPECT_EQ(*back[i].coords, *mols[i].coords) << mols[i].name;
  }
}

TEST(Xyz, ParsesSingleAtom) {
  const Molecule m = parse_xyz("1\n\nH 0 0 0", "h");
  ASSERT_EQ(m.num_atoms(), 1u);
  EXPECT_EQ(m.atoms[0].element, Element::H);
  EXPECT_EQ((*m.coords)[0], (Vec3{ 0, 0, 0 }));
}

TEST(Xyz, ParsesEthaneFragmentWithoutBonds) {
  const Molecule m = parse_xyz("2\nc\nC 0 0 0\nC 0 0 1.54");
  EXPECT_EQ(m.num_atoms(), 2u);
  EXPECT_EQ(m.num_bonds(), 0u);
  EXPECT_DOUBLE_EQ((*m.coords)[1][2], 1.54);
}

TEST(Xyz, CountMismatchIsAnError) {
  EXPECT_THROW(parse_xyz("3\n\nO 0 0 0\nH 1 0 0"), ParseError);
  EXPECT_THROW(parse_xyz("1\n\nC 0 zero 0"), ParseError);
}

TEST(Smiles, EthaneMaterializesHydrogens) {
  const Molecule m = parse_smiles("CC");
  EXPECT_EQ(count_element(m, Element::C), 2u);
  EXPECT_EQ(count_element(m, Element::H), 6u);
  EXPECT_EQ(m.num_bonds(), 7u);
  EXPECT_EQ(m.bonds[0], (Bond{ 0, 1, BondOrder::Single, false }));
  // Hydrogens follow the heavy atoms.
  EXPECT_EQ(m.atoms[2].element, Element::H);
}

TEST(Smiles, BenzeneCountsMatchToolkit) {
  // Counts from RDKit after AddHs: 12 atoms, 12 bonds.
  const Molecule m = parse_smiles("c1ccccc1");
  EXPECT_EQ(m.num_atoms(), 12u);
  EXPECT_EQ(m.num_bonds(), 12u);
  std::size_t aromatic_bonds = 0;
  for (const Bond &b : m.bonds)
    aromatic_bonds += b.order == BondOrder::Aromatic ? 1 : 0;
  EXPECT_EQ(aromatic_bonds, 6u);
  for (std::size_t i = 0; i < 6; ++i)
    EXPECT_TRUE(m.atoms[i].aromatic);
}

TEST(Smiles, SyntaxErrors) {
  EXPECT_THROW(parse_smiles("C("), SmilesError);
  EXPECT_THROW(parse_smiles("C)"), SmilesError);
  EXPECT_THROW(parse_smiles("C1CC"), SmilesError);
  EXPECT_THROW(parse_smiles("C()C"), SmilesError);
  EXPECT_THROW(parse_smiles("[Xe]"), SmilesError);
  EXPECT_THROW(parse_smiles("C@C"), SmilesError);
  EXPECT_THROW(parse_smiles(""), SmilesError);
  EXPECT_THROW(parse_smiles("C(C)(C)(C)(C)C"), SmilesError);
}

TEST(Smiles, BracketAtomsAndCharges) {
  const Molecule m = parse_smiles("[NH4+]");
  EXPECT_EQ(m.atoms[0].formal_charge, 1);
  EXPECT_EQ(count_element(m, Element::H), 4u);
  const Molecule o = parse_smiles("C[O-]");
  EXPECT_EQ(o.atoms[1].formal_charge, -1);
  EXPECT_EQ(count_element(o, Element::H), 3u);
  const Molecule ring = parse_smiles("C%10CC%10");
  EXPECT_EQ(count_element(ring, Element::H), 6u);
}

TEST(Smiles, PyrroleAndPyridineHydrogens) {
  EXPECT_EQ(count_element(parse_smiles("c1cc[nH]c1"), Element::H), 5u);
  EXPECT_EQ(count_element(parse_smiles("c1ccncc1"), Element::H), 5u);
  EXPECT_EQ(count_element(parse_smiles("c1ccoc1"), Element::H), 4u);
}

TEST(Smiles, NeutralOrganicAtomsReachStandardValence) {
  for (const char *smi : { "CCO", "C=CC#N", "CC(=O)C", "ClCCBr", "C1CCCCC1",
                           "OC(F)(F)F", "N#CC=O", "CC(C)(C)C" }) {
    const Molecule m = parse_smiles(smi);
    std::vector<int> used(m.num_atoms(), 0);
    for (const Bond &b : m.bonds) {
      used[b.a] += valence_contribution(b.order);
      used[b.b] += valence_contribution(b.order);
    }
    for (const Atom &a : m.atoms)
      EXPECT_EQ(used[a.index], standard_valence(a.element))
          << smi << " atom " << a.index;
  }
}

TEST(Dataset, JoinsStructuresAndTargets) {
  const fs::path dir = temp_dir("dataset");
  std::string sdf;
  for (const char *name : { "a", "b", "c" }) {
    std::string block = kWater;
    block.replace(0, 5, name);
    sdf += block;
  }
  write_file(dir / "m.sdf", sdf);
  write_file(dir / "t.csv", "name,gap,r2\na,1.5,3\nb,2.5,4\nc,3.5,5\n");
  const std::string gap[] = { "gap" };
  const Dataset ds = load_dataset(dir / "m.sdf", dir / "t.csv", gap);
  ASSERT_EQ(ds.records.size(), 3u);
  EXPECT_DOUBLE_EQ(ds.records[1].targets.at("gap"), 2.5);

  write_file(dir / "t2.csv", "name,gap\na,1\nc,3\n");
  const Dataset partial = load_dataset(dir / "m.sdf", dir / "t2.csv", gap);
  EXPECT_EQ(partial.records.size(), 2u);
  EXPECT_EQ(partial.warnings.size(), 1u);
  EXPECT_EQ(partial.missing_targets, 1u);

  write_file(dir / "t3.csv", "id,gap\na,1\n");
  EXPECT_THROW(load_dataset(dir / "m.sdf", dir / "t3.csv", gap), DataError);
}

TEST(Dataset, XyzDirectoryUsesFileStem) {
  const fs::path dir = temp_dir("xyzdir");
  fs::create_directories(dir / "mols");
  write_file(dir / "mols" / "m1.xyz", "1\n\nH 0 0 0\n");
  write_file(dir / "mols" / "m2.xyz", "2\n\nH 0 0 0\nH 0 0 0.74\n");
  write_file(dir / "t.csv", "name,gap\nm1,1\nm2,2\n");
  const std::string gap[] = { "gap" };
  const Dataset ds = load_dataset(dir / "mols", dir / "t.csv", gap);
  ASSERT_EQ(ds.records.size(), 2u);
  EXPECT_EQ(ds.records[1].molecule.name, "m2");
}

TEST(Split, EightyTenTen) {
  auto idx = split_indices(100, 3);
  EXPECT_EQ(idx[0].size(), 80u);
  EXPECT_EQ(idx[1].size(), 10u);
  EXPECT_EQ(idx[2].size(), 10u);
  idx = split_indices(10, 3);
  EXPECT_EQ(idx[0].size(), 8u);
  EXPECT_EQ(idx[1].size(), 1u);
  EXPECT_EQ(idx[2].size(), 1u);
  EXPECT_EQ(split_indices(57, 11), split_indices(57, 11));
}

TEST(Split, PartitionsAreComplete) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const std::size_t n = 10 + seed % 91;
    const auto idx = split_indices(n, seed);
    std::vector<std::size_t> all;
    for (const auto &part : idx)
      all.insert(all.end(), part.begin(), part.end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), n);
    for (std::size_t i = 0; i < n; ++i)
      ASSERT_EQ(all[i], i) << "seed " << seed;
  }
}

TEST(SampleData, BundledFilesLoad) {
  const fs::path dir = EQUIHG_DATA_DIR;
  const std::string gap[] = { "gap", "r2" };
  const Dataset ds = load_dataset(dir / "qm9_sample.sdf",
                                  dir / "qm9_sample_targets.csv", gap);
  EXPECT_GE(ds.records.size(), 1000u);
  for (const DatasetRecord &r : ds.records) {
    ASSERT_TRUE(r.molecule.has_coords());
    EXPECT_LE(r.molecule.num_atoms(), 29u);
  }
}
