//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "equihg/chem.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "equihg/error.hpp"

namespace equihg {
namespace {
constexpr std::array<std::string_view, kNumElements> kSymbols = {
  "H", "B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "Br", "I",
};
}  // namespace

std::string_view element_symbol(Element e) {
  return kSymbols[static_cast<std::size_t>(e)];
}

std::optional<Element> element_from_symbol(std::string_view symbol) {
  for (std::size_t i = 0; i < kSymbols.size(); ++i) {
    if (kSymbols[i] == symbol)
      return static_cast<Element>(i);
  }
  return std::nullopt;
}

int valence_contribution(BondOrder order) {
  switch (order) {
  case BondOrder::Single:
  case BondOrder::Aromatic:
    return 1;
  case BondOrder::Double:
    return 2;
  case BondOrder::Triple:
    return 3;
  }
  return 1;
}

std::vector<std::size_t> Molecule::degrees() const {
  std::vector<std::size_t> deg(atoms.size(), 0);
  for (const Bond &b : bonds) {
    ++deg[b.a];
    ++deg[b.b];
  }
  return deg;
}

void Molecule::validate() const {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].index != i)
      throw InvariantError("atom indices must be contiguous from 0");
  }

  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Bond &b : bonds) {
    if (b.a >= atoms.size() || b.b >= atoms.size())
      throw InvariantError("bond endpoint out of range");
    if (b.a == b.b)
      throw InvariantError("self bond on atom " + std::to_string(b.a));
    if (!seen.insert(std::minmax(b.a, b.b)).second)
      throw InvariantError("duplicate bond " + std::to_string(b.a) + "-"
                           + std::to_string(b.b));
    if (b.order == BondOrder::Aromatic
        && (!atoms[b.a].aromatic || !atoms[b.b].aromatic))
      throw InvariantError("aromatic bond between non-aromatic atoms");
  }

  if (coords) {
    if (coords->size() != atoms.size())
      throw InvariantError("coordinate rows do not match atom count");
    for (const Vec3 &p : *coords) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
        throw InvariantError("non-finite coordinate");
    }
  }
}

Molecule Molecule::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != atoms.size())
    throw InvariantError("permutation size does not match atom count");

  std::vector<std::size_t> inverse(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    inverse[perm[i]] = i;

  Molecule out;
  out.name = name;
  out.atoms.reserve(atoms.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    Atom a = atoms[perm[i]];
    a.index = i;
    out.atoms.push_back(a);
  }
  for (Bond b : bonds) {
    b.a = inverse[b.a];
    b.b = inverse[b.b];
    out.bonds.push_back(b);
  }
  if (coords) {
    std::vector<Vec3> xs(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
      xs[i] = (*coords)[perm[i]];
    out.coords = std::move(xs);
  }
  return out;
}

}  // namespace equihg
