//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <vector>

#include <fmt/format.h>

#include "equihg/chemio.hpp"
#include "equihg/error.hpp"

namespace equihg {
namespace {
struct ParsedAtom {
  Element element;
  bool aromatic = false;
  bool bracket = false;
  int charge = 0;
  int hcount = 0;  // bracket atoms only
  std::size_t pos = 0;
};

struct RingBond {
  std::size_t atom;
  std::optional<BondOrder> order;
  std::size_t pos;
};

// Standard valences for the organic subset, smallest first.
std::span<const int> allowed_valences(Element e) {
  static constexpr int kB[] = { 3 }, kC[] = { 4 }, kN[] = { 3, 5 },
                       kO[] = { 2 }, kP[] = { 3, 5 }, kS[] = { 2, 4, 6 },
                       kHal[] = { 1 };
  switch (e) {
  case Element::B:
    return kB;
  case Element::C:
    return kC;
  case Element::N:
    return kN;
  case Element::O:
    return kO;
  case Element::P:
    return kP;
  case Element::S:
    return kS;
  case Element::F:
  case Element::Cl:
  case Element::Br:
  case Element::I:
    return kHal;
  default:
    return {};
  }
}

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view s): s_(s) { }

  Molecule parse() {
    if (s_.empty())
      throw SmilesError(0, "empty SMILES");

    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (c == '(') {
        if (!prev_)
          throw SmilesError(i_, "branch without a preceding atom");
        branches_.push_back({ *prev_, i_ });
        ++i_;
        branch_empty_ = true;
      } else if (c == ')') {
        if (branches_.empty())
          throw SmilesError(i_, "unmatched ')'");
        if (branch_empty_)
          throw SmilesError(i_, "empty branch");
        if (pending_)
          throw SmilesError(i_, "bond symbol before ')'");
        prev_ = branches_.back().first;
        branches_.pop_back();
        ++i_;
      } else if (c == '-' || c == '=' || c == '#' || c == ':') {
        if (pending_)
          throw SmilesError(i_, "two consecutive bond symbols");
        pending_ = c == '-'   ? BondOrder::Single
                   : c == '=' ? BondOrder::Double
                   : c == '#' ? BondOrder::Triple
                              : BondOrder::Aromatic;
        pending_pos_ = i_;
        ++i_;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        ring_closure();
      } else if (c == '[') {
        add_atom(bracket_atom());
      } else if (std::isalpha(static_cast<unsigned char>(c))) {
        add_atom(organic_atom());
      } else {
        throw SmilesError(i_, fmt::format("unsupported token '{}'", c));
      }
    }

    if (!branches_.empty())
      throw SmilesError(branches_.back().second, "unmatched '('");
    if (!rings_.empty())
      throw SmilesError(rings_.begin()->second.pos,
                        fmt::format("unmatched ring closure {}",
                                    rings_.begin()->first));
    if (pending_)
      throw SmilesError(pending_pos_, "dangling bond symbol");

    return build();
  }

 private:
  ParsedAtom organic_atom() {
    ParsedAtom atom;
    atom.pos = i_;
    const std::string_view two = s_.substr(i_, 2);
    if (two == "Cl" || two == "Br") {
      atom.element = two == "Cl" ? Element::Cl : Element::Br;
      i_ += 2;
      return atom;
    }

    const char c = s_[i_];
    switch (c) {
    case 'B':
      atom.element = Element::B;
      break;
    case 'C':
      atom.element = Element::C;
      break;
    case 'N':
      atom.element = Element::N;
      break;
    case 'O':
      atom.element = Element::O;
      break;
    case 'P':
      atom.element = Element::P;
      break;
    case 'S':
      atom.element = Element::S;
      break;
    case 'F':
      atom.element = Element::F;
      break;
    case 'I':
      atom.element = Element::I;
      break;
    case 'b':
    case 'c':
    case 'n':
    case 'o':
    case 'p':
    case 's': {
      const char upper = static_cast<char>(std::toupper(c));
      atom.element = *element_from_symbol(std::string_view(&upper, 1));
      atom.aromatic = true;
      break;
    }
    default:
      throw SmilesError(i_, fmt::format("unsupported atom '{}'", c));
    }
    ++i_;
    return atom;
  }

  ParsedAtom bracket_atom() {
    const std::size_t open = i_++;
    ParsedAtom atom;
    atom.pos = open;
    atom.bracket = true;

    if (i_ >= s_.size())
      throw SmilesError(open, "unterminated bracket atom");

    const char c = s_[i_];
    if (std::islower(static_cast<unsigned char>(c))) {
      const char upper = static_cast<char>(std::toupper(c));
      auto e = element_from_symbol(std::string_view(&upper, 1));
      if (!e || !(c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p'
                  || c == 's'))
        throw SmilesError(i_, fmt::format("unsupported aromatic atom '{}'", c));
      atom.element = *e;
      atom.aromatic = true;
      ++i_;
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      std::optional<Element> e;
      if (i_ + 1 < s_.size()
          && std::islower(static_cast<unsigned char>(s_[i_ + 1]))) {
        e = element_from_symbol(s_.substr(i_, 2));
        if (e)
          i_ += 2;
      }
      if (!e) {
        e = element_from_symbol(s_.substr(i_, 1));
        if (!e)
          throw SmilesError(i_, fmt::format("unsupported element in '{}'",
                                            s_.substr(open)));
        ++i_;
      }
      atom.element = *e;
    } else {
      throw SmilesError(i_, "unsupported bracket atom (isotopes and wildcards "
                            "are not supported)");
    }

    if (i_ < s_.size() && s_[i_] == 'H') {
      ++i_;
      atom.hcount = 1;
      if (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_])))
        atom.hcount = s_[i_++] - '0';
    }

    if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) {
      const char sign = s_[i_++];
      int magnitude = 1;
      if (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
        magnitude = s_[i_++] - '0';
      } else {
        while (i_ < s_.size() && s_[i_] == sign) {
          ++magnitude;
          ++i_;
        }
      }
      atom.charge = sign == '+' ? magnitude : -magnitude;
    }

    if (i_ >= s_.size())
      throw SmilesError(open, "unterminated bracket atom");
    if (s_[i_] != ']')
      throw SmilesError(i_, fmt::format("unsupported token '{}' in bracket "
                                        "atom",
                                        s_[i_]));
    ++i_;
    return atom;
  }

  void ring_closure() {
    const std::size_t pos = i_;
    int label = 0;
    if (s_[i_] == '%') {
      if (i_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_ + 1]))
          || !std::isdigit(static_cast<unsigned char>(s_[i_ + 2])))
        throw SmilesError(i_, "'%' must be followed by two digits");
      label = (s_[i_ + 1] - '0') * 10 + (s_[i_ + 2] - '0');
      i_ += 3;
    } else {
      label = s_[i_] - '0';
      ++i_;
      if (label == 0)
        throw SmilesError(pos, "ring closure 0 is not supported");
    }
    if (!prev_)
      throw SmilesError(pos, "ring closure without a preceding atom");

    auto it = rings_.find(label);
    if (it == rings_.end()) {
      rings_.emplace(label, RingBond { *prev_, pending_, pos });
      pending_.reset();
      return;
    }

    RingBond open = it->second;
    rings_.erase(it);
    if (open.order && pending_ && *open.order != *pending_)
      throw SmilesError(pos, "conflicting ring closure bond orders");
    std::optional<BondOrder> order = pending_ ? pending_ : open.order;
    pending_.reset();
    connect(open.atom, *prev_, order, pos);
  }

  void add_atom(const ParsedAtom &atom) {
    atoms_.push_back(atom);
    const std::size_t idx = atoms_.size() - 1;
    if (prev_) {
      connect(*prev_, idx, pending_, atom.pos);
    } else if (pending_) {
      throw SmilesError(pending_pos_, "bond symbol without a preceding atom");
    }
    pending_.reset();
    prev_ = idx;
    branch_empty_ = false;
  }

  void connect(std::size_t a, std::size_t b, std::optional<BondOrder> order,
               std::size_t pos) {
    if (a == b)
      throw SmilesError(pos, "ring closure onto the same atom");
    for (const Bond &bond : bonds_) {
      if (std::minmax(bond.a, bond.b) == std::minmax(a, b))
        throw SmilesError(pos, "duplicate bond");
    }

    BondOrder o;
    if (order) {
      o = *order;
    } else {
      o = atoms_[a].aromatic && atoms_[b].aromatic ? BondOrder::Aromatic
                                                   : BondOrder::Single;
    }
    if (o == BondOrder::Aromatic && !(atoms_[a].aromatic && atoms_[b].aromatic))
      throw SmilesError(pos, "aromatic bond between non-aromatic atoms");
    bonds_.push_back({ a, b, o, false });
  }

  int implicit_hydrogens(std::size_t idx, int bond_sum) const {
    const ParsedAtom &atom = atoms_[idx];
    if (atom.bracket)
      return atom.hcount;

    auto valences = allowed_valences(atom.element);
    if (atom.aromatic) {
      // One electron goes to the ring; only the lowest valence applies.
      const int used = bond_sum + 1;
      if (used <= valences.front())
        return valences.front() - used;
      if (used == valences.front() + 1 && atom.element != Element::C
          && atom.element != Element::B)
        return 0;  // furan o, thiophene s, pyrrole-type n
    } else {
      for (int v : valences) {
        if (v >= bond_sum)
          return v - bond_sum;
      }
    }
    throw SmilesError(atom.pos,
                      fmt::format("valence overflow on {} (bond order sum {})",
                                  element_symbol(atom.element), bond_sum));
  }

  Molecule build() const {
    std::vector<int> bond_sum(atoms_.size(), 0);
    for (const Bond &b : bonds_) {
      bond_sum[b.a] += valence_contribution(b.order);
      bond_sum[b.b] += valence_contribution(b.order);
    }

    Molecule mol;
    mol.name = std::string(s_);
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      Atom a;
      a.element = atoms_[i].element;
      a.aromatic = atoms_[i].aromatic;
      a.formal_charge = atoms_[i].charge;
      a.index = i;
      mol.atoms.push_back(a);
    }
    mol.bonds = bonds_;

    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const int nh = implicit_hydrogens(i, bond_sum[i]);
      for (int k = 0; k < nh; ++k) {
        Atom h;
        h.element = Element::H;
        h.index = mol.atoms.size();
        mol.atoms.push_back(h);
        mol.bonds.push_back({ i, h.index, BondOrder::Single, false });
      }
    }
    try {
      mol.validate();
    } catch (const InvariantError &e) {
      throw SmilesError(0, e.what());
    }
    return mol;
  }

  std::string_view s_;
  std::size_t i_ = 0;
  std::vector<ParsedAtom> atoms_;
  std::vector<Bond> bonds_;
  std::optional<std::size_t> prev_;
  std::optional<BondOrder> pending_;
  std::size_t pending_pos_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> branches_;
  bool branch_empty_ = false;
  std::map<int, RingBond> rings_;
};
}  // namespace

Molecule parse_smiles(std::string_view smiles) {
  return SmilesParser(smiles).parse();
}

}  // namespace equihg
