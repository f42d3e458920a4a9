//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace equihg {

/// The supported element whitelist. Anything else is rejected at parse time.
enum class Element : std::uint8_t { H, B, C, N, O, F, Si, P, S, Cl, Br, I };

inline constexpr std::size_t kNumElements = 12;

std::string_view element_symbol(Element e);

/// Case-sensitive lookup ("Cl", not "CL"). Returns nullopt for anything
/// outside the whitelist.
std::optional<Element> element_from_symbol(std::string_view symbol);

enum class BondOrder : std::uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

/// Integer bond order used for valence sums; aromatic counts as 1.
int valence_contribution(BondOrder order);

inline bool is_multiple(BondOrder order) {
  return order != BondOrder::Single;
}

struct Atom {
  Element element = Element::C;
  int formal_charge = 0;
  bool aromatic = false;
  std::size_t index = 0;

  bool operator==(const Atom &) const = default;
};

struct Bond {
  std::size_t a = 0;
  std::size_t b = 0;
  BondOrder order = BondOrder::Single;
  bool conjugated = false;

  bool operator==(const Bond &) const = default;
};

using Vec3 = std::array<double, 3>;

struct Molecule {
  std::string name;
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::optional<std::vector<Vec3>> coords;

  std::size_t num_atoms() const { return atoms.size(); }
  std::size_t num_bonds() const { return bonds.size(); }
  bool has_coords() const { return coords.has_value(); }

  /// Number of bonds touching each atom.
  std::vector<std::size_t> degrees() const;

  /// Throws InvariantError when indices, bonds or coordinates are
  /// inconsistent. Parsers call this before handing a molecule out.
  void validate() const;

  /// Relabel atoms: atom i of the result is atom perm[i] of this molecule.
  Molecule permuted(std::span<const std::size_t> perm) const;

  bool operator==(const Molecule &) const = default;
};

struct DatasetRecord {
  Molecule molecule;
  std::map<std::string, double> targets;
};

}  // namespace equihg
