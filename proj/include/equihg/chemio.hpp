//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "equihg/chem.hpp"

namespace equihg {

/// Reads a stream of MDL V2000 molfile blocks separated by `$$$$`.
///
/// The title line becomes Molecule::name. Bond types 1/2/3/4 map to
/// single/double/triple/aromatic and an aromatic bond marks both of its
/// atoms aromatic. When a block carries `M  CHG` lines they replace the
/// atom-block charge column entirely.
///
/// Errors are ParseError with the 1-based line number in the input.
std::vector<Molecule> parse_sdf(std::string_view text);

/// Writes V2000 blocks; molecules without coordinates get zeros.
std::string write_sdf(std::span<const Molecule> molecules);

/// XYZ: atom count, comment line, then `symbol x y z` rows. No bonds.
Molecule parse_xyz(std::string_view text, std::string name = {});

/// Parses the supported SMILES subset (organic subset, bracket atoms with
/// H count and charge, `-=#:` bonds, branches, ring closures `1`-`9` and
/// `%nn`). Implicit hydrogens are materialized as explicit H atoms appended
/// after the heavy atoms, in heavy-atom order.
Molecule parse_smiles(std::string_view smiles);

std::vector<Molecule> read_molecules(const std::filesystem::path &path);

struct Dataset {
  std::vector<DatasetRecord> records;
  std::size_t missing_targets = 0;     // structures with no CSV row
  std::size_t missing_structures = 0;  // CSV rows with no structure
  std::vector<std::string> warnings;
};

/// Joins structures with a targets CSV on the molecule name.
///
/// `molecule_source` is an SDF file or a directory of `.xyz` files (the
/// file stem is the name). The CSV needs a `name` column and one column per
/// requested target. Records keep the structure order.
Dataset load_dataset(const std::filesystem::path &molecule_source,
                     const std::filesystem::path &targets_csv,
                     std::span<const std::string> target_names);

struct DatasetSplit {
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> val;
  std::vector<DatasetRecord> test;
};

/// Seeded shuffle, then cuts at floor(0.8 N) and floor(0.9 N).
DatasetSplit split_dataset(std::span<const DatasetRecord> records,
                           std::uint64_t seed);

/// Same permutation as split_dataset, as index lists.
std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n,
                                                      std::uint64_t seed);

}  // namespace equihg
