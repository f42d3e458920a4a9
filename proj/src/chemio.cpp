//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "equihg/chemio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "equihg/error.hpp"

namespace equihg {
namespace {
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

bool is_blank(std::string_view s) {
  return trim(s).empty();
}

std::string_view column(std::string_view line, std::size_t begin,
                        std::size_t width) {
  if (begin >= line.size())
    return {};
  return line.substr(begin, width);
}

template <class T>
std::optional<T> parse_number(std::string_view field) {
  field = trim(field);
  if (field.empty())
    return std::nullopt;
  if (field.front() == '+')
    field.remove_prefix(1);
  T value {};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(),
                                   value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    return std::nullopt;
  return value;
}

int charge_from_code(int code) {
  switch (code) {
  case 1:
    return 3;
  case 2:
    return 2;
  case 3:
    return 1;
  case 5:
    return -1;
  case 6:
    return -2;
  case 7:
    return -3;
  default:
    return 0;
  }
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

class SdfBlockParser {
 public:
  SdfBlockParser(std::span<const std::string_view> lines, std::size_t first)
      : lines_(lines), pos_(first) { }

  Molecule parse() {
    const std::size_t first_line = pos_ + 1;
    Molecule mol;
    mol.name = std::string(trim(require("header")));
    require("header");
    require("header");

    const std::size_t counts_lineno = pos_ + 1;
    std::string_view counts = require("counts line");
    if (counts.find("V3000") != std::string_view::npos)
      throw ParseError(counts_lineno, "V3000 molfiles are not supported");
    auto natoms = parse_number<int>(column(counts, 0, 3));
    auto nbonds = parse_number<int>(column(counts, 3, 3));
    if (!natoms || !nbonds || *natoms < 0 || *nbonds < 0)
      throw ParseError(counts_lineno,
                       "malformed counts line '" + std::string(counts) + "'");

    std::vector<Vec3> xyz;
    for (int k = 0; k < *natoms; ++k)
      parse_atom_row(mol, xyz, k, *natoms);
    mol.coords = std::move(xyz);

    for (int k = 0; k < *nbonds; ++k)
      parse_bond_row(mol, k, *nbonds);

    parse_properties(mol);
    skip_to_delimiter();

    for (std::size_t i = 0; i < mol.atoms.size(); ++i)
      mol.atoms[i].index = i;
    try {
      mol.validate();
    } catch (const InvariantError &e) {
      throw ParseError(first_line, std::string("inconsistent block: ") + e.what());
    }
    return mol;
  }

  std::size_t position() const { return pos_; }

 private:
  std::string_view require(const char *what) {
    if (pos_ >= lines_.size())
      throw ParseError(pos_ + 1, fmt::format("unexpected end of input in {}",
                                             what));
    return lines_[pos_++];
  }

  bool at_block_end(std::string_view line) const {
    return starts_with(line, "M  ") || starts_with(line, "$$$$");
  }

  void parse_atom_row(Molecule &mol, std::vector<Vec3> &xyz, int k, int n) {
    const std::size_t lineno = pos_ + 1;
    if (pos_ >= lines_.size() || at_block_end(lines_[pos_]))
      throw ParseError(lineno,
                       fmt::format("atom count mismatch: counts line declares "
                                   "{} atoms, found {}",
                                   n, k));
    std::string_view line = lines_[pos_++];

    Vec3 p {};
    for (std::size_t d = 0; d < 3; ++d) {
      auto v = parse_number<double>(column(line, 10 * d, 10));
      if (!v || !std::isfinite(*v))
        throw ParseError(lineno,
                         fmt::format("atom row {} of {}: non-numeric "
                                     "coordinate '{}'",
                                     k + 1, n,
                                     trim(column(line, 10 * d, 10))));
      p[d] = *v;
    }

    std::string_view symbol = trim(column(line, 31, 3));
    auto element = element_from_symbol(symbol);
    if (!element)
      throw ParseError(lineno, fmt::format("unsupported element '{}'", symbol));

    Atom atom;
    atom.element = *element;
    if (auto code = parse_number<int>(column(line, 36, 3)))
      atom.formal_charge = charge_from_code(*code);
    mol.atoms.push_back(atom);
    xyz.push_back(p);
  }

  void parse_bond_row(Molecule &mol, int k, int n) {
    const std::size_t lineno = pos_ + 1;
    if (pos_ >= lines_.size() || at_block_end(lines_[pos_]))
      throw ParseError(lineno,
                       fmt::format("bond count mismatch: counts line declares "
                                   "{} bonds, found {}",
                                   n, k));
    std::string_view line = lines_[pos_++];

    auto a = parse_number<int>(column(line, 0, 3));
    auto b = parse_number<int>(column(line, 3, 3));
    auto type = parse_number<int>(column(line, 6, 3));
    if (!a || !b || !type)
      throw ParseError(lineno, "malformed bond row '" + std::string(line) + "'");

    const int natoms = static_cast<int>(mol.atoms.size());
    if (*a < 1 || *a > natoms || *b < 1 || *b > natoms || *a == *b)
      throw ParseError(lineno, fmt::format("bond endpoints {} {} out of range",
                                           *a, *b));
    if (*type < 1 || *type > 4)
      throw ParseError(lineno, fmt::format("unsupported bond type {}", *type));

    Bond bond;
    bond.a = static_cast<std::size_t>(*a - 1);
    bond.b = static_cast<std::size_t>(*b - 1);
    bond.order = static_cast<BondOrder>(*type);
    for (const Bond &other : mol.bonds) {
      if (std::minmax(other.a, other.b) == std::minmax(bond.a, bond.b))
        throw ParseError(lineno, "duplicate bond");
    }
    if (bond.order == BondOrder::Aromatic) {
      mol.atoms[bond.a].aromatic = true;
      mol.atoms[bond.b].aromatic = true;
    }
    mol.bonds.push_back(bond);
  }

  void parse_properties(Molecule &mol) {
    bool saw_chg = false;
    while (pos_ < lines_.size()) {
      std::string_view line = lines_[pos_];
      if (starts_with(line, "$$$$"))
        return;
      ++pos_;
      if (starts_with(line, "M  END"))
        return;
      if (!starts_with(line, "M  CHG"))
        continue;

      if (!saw_chg) {
        for (Atom &a : mol.atoms)
          a.formal_charge = 0;
        saw_chg = true;
      }
      std::istringstream ss { std::string(line.substr(6)) };
      int count = 0;
      if (!(ss >> count) || count < 0)
        throw ParseError(pos_, "malformed M  CHG line");
      for (int i = 0; i < count; ++i) {
        int idx = 0, chg = 0;
        if (!(ss >> idx >> chg))
          throw ParseError(pos_, "malformed M  CHG line");
        if (idx < 1 || idx > static_cast<int>(mol.atoms.size()))
          throw ParseError(pos_, "M  CHG atom index out of range");
        mol.atoms[static_cast<std::size_t>(idx - 1)].formal_charge = chg;
      }
    }
  }

  void skip_to_delimiter() {
    while (pos_ < lines_.size()) {
      if (starts_with(lines_[pos_++], "$$$$"))
        return;
    }
  }

  std::span<const std::string_view> lines_;
  std::size_t pos_;
};

int charge_code(int charge) {
  switch (charge) {
  case 3:
    return 1;
  case 2:
    return 2;
  case 1:
    return 3;
  case -1:
    return 5;
  case -2:
    return 6;
  case -3:
    return 7;
  default:
    return 0;
  }
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_row(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::string(trim(cur)));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::string(trim(cur)));
  return fields;
}
}  // namespace

std::vector<Molecule> parse_sdf(std::string_view text) {
  auto lines = split_lines(text);
  std::vector<Molecule> out;

  std::size_t pos = 0;
  while (pos < lines.size()) {
    bool rest_blank = std::all_of(lines.begin() + pos, lines.end(), is_blank);
    if (rest_blank)
      break;
    SdfBlockParser block(lines, pos);
    out.push_back(block.parse());
    pos = block.position();
  }
  return out;
}

std::string write_sdf(std::span<const Molecule> molecules) {
  std::string out;
  for (const Molecule &mol : molecules) {
    out += mol.name;
    out += "\n  equihg\n\n";
    out += fmt::format("{:3d}{:3d}  0  0  0  0  0  0  0  0999 V2000\n",
                       mol.atoms.size(), mol.bonds.size());
    for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
      Vec3 p = mol.coords ? (*mol.coords)[i] : Vec3 { 0, 0, 0 };
      out += fmt::format("{:10.4f}{:10.4f}{:10.4f} {:<3} 0{:3d}  0  0  0  0  0"
                         "  0  0  0  0  0\n",
                         p[0], p[1], p[2], element_symbol(mol.atoms[i].element),
                         charge_code(mol.atoms[i].formal_charge));
    }
    for (const Bond &b : mol.bonds) {
      out += fmt::format("{:3d}{:3d}{:3d}  0\n", b.a + 1, b.b + 1,
                         static_cast<int>(b.order));
    }

    std::vector<std::size_t> charged;
    for (const Atom &a : mol.atoms) {
      if (a.formal_charge != 0)
        charged.push_back(a.index);
    }
    for (std::size_t i = 0; i < charged.size(); i += 8) {
      std::size_t n = std::min<std::size_t>(8, charged.size() - i);
      out += fmt::format("M  CHG{:3d}", n);
      for (std::size_t k = i; k < i + n; ++k)
        out += fmt::format(" {:3d} {:3d}", charged[k] + 1,
                           mol.atoms[charged[k]].formal_charge);
      out += '\n';
    }
    out += "M  END\n$$$$\n";
  }
  return out;
}

Molecule parse_xyz(std::string_view text, std::string name) {
  auto lines = split_lines(text);
  if (lines.empty() || is_blank(lines[0]))
    throw ParseError(1, "missing atom count");
  auto count = parse_number<long>(lines[0]);
  if (!count || *count < 0)
    throw ParseError(1, "malformed atom count '" + std::string(lines[0]) + "'");

  Molecule mol;
  mol.name = std::move(name);
  std::vector<Vec3> xyz;
  for (long k = 0; k < *count; ++k) {
    const std::size_t idx = static_cast<std::size_t>(k) + 2;
    if (idx >= lines.size() || is_blank(lines[idx]))
      throw ParseError(idx + 1, fmt::format("atom count mismatch: header "
                                            "declares {} atoms, found {}",
                                            *count, k));
    std::istringstream ss { std::string(lines[idx]) };
    std::string symbol, fx, fy, fz;
    if (!(ss >> symbol >> fx >> fy >> fz))
      throw ParseError(idx + 1, "expected 'symbol x y z'");
    auto element = element_from_symbol(symbol);
    if (!element)
      throw ParseError(idx + 1, "unsupported element '" + symbol + "'");
    Vec3 p {};
    const std::string *fields[] = { &fx, &fy, &fz };
    for (std::size_t d = 0; d < 3; ++d) {
      auto v = parse_number<double>(*fields[d]);
      if (!v || !std::isfinite(*v))
        throw ParseError(idx + 1, "unparseable coordinate '" + *fields[d] + "'");
      p[d] = *v;
    }
    Atom atom;
    atom.element = *element;
    atom.index = mol.atoms.size();
    mol.atoms.push_back(atom);
    xyz.push_back(p);
  }
  mol.coords = std::move(xyz);
  mol.validate();
  return mol;
}

std::vector<Molecule> read_molecules(const std::filesystem::path &path) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto &entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".xyz")
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Molecule> out;
    for (const auto &f : files) {
      try {
        out.push_back(parse_xyz(read_file(f), f.stem().string()));
      } catch (const ParseError &e) {
        throw Error(f.string() + ": " + e.what());
      }
    }
    return out;
  }

  const std::string text = read_file(path);
  const std::string ext = path.extension().string();
  if (ext == ".xyz")
    return { parse_xyz(text, path.stem().string()) };
  if (ext == ".smi" || ext == ".smiles" || ext == ".txt") {
    std::vector<Molecule> out;
    std::size_t lineno = 0;
    for (std::string_view line : split_lines(text)) {
      ++lineno;
      line = trim(line);
      if (line.empty() || line.front() == '#')
        continue;
      std::size_t sp = line.find_first_of(" \t");
      std::string_view smi = line.substr(0, sp);
      try {
        Molecule mol = parse_smiles(smi);
        if (sp != std::string_view::npos)
          mol.name = std::string(trim(line.substr(sp)));
        out.push_back(std::move(mol));
      } catch (const SmilesError &e) {
        throw ParseError(lineno, e.what());
      }
    }
    return out;
  }
  return parse_sdf(text);
}

Dataset load_dataset(const std::filesystem::path &molecule_source,
                     const std::filesystem::path &targets_csv,
                     std::span<const std::string> target_names) {
  std::vector<Molecule> molecules = read_molecules(molecule_source);

  const std::string csv = read_file(targets_csv);
  auto lines = split_lines(csv);
  std::size_t first = 0;
  while (first < lines.size() && is_blank(lines[first]))
    ++first;
  if (first == lines.size())
    throw DataError(targets_csv.string() + ": missing header row");

  std::vector<std::string> header = split_csv_row(lines[first]);
  if (!header.empty() && starts_with(header[0], "\xEF\xBB\xBF"))
    header[0].erase(0, 3);

  auto find_column = [&](const std::string &col) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end())
      return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  auto key_col = find_column("name");
  if (!key_col)
    throw DataError(targets_csv.string() + ": header has no 'name' column");
  std::vector<std::size_t> target_cols;
  for (const auto &t : target_names) {
    auto c = find_column(t);
    if (!c)
      throw DataError(targets_csv.string() + ": header has no '" + t
                      + "' column");
    target_cols.push_back(*c);
  }

  std::unordered_map<std::string, std::map<std::string, double>> rows;
  for (std::size_t li = first + 1; li < lines.size(); ++li) {
    if (is_blank(lines[li]))
      continue;
    auto fields = split_csv_row(lines[li]);
    if (fields.size() != header.size())
      throw ParseError(li + 1, fmt::format("expected {} fields, found {}",
                                           header.size(), fields.size()));
    std::map<std::string, double> values;
    for (std::size_t t = 0; t < target_cols.size(); ++t) {
      auto v = parse_number<double>(fields[target_cols[t]]);
      if (!v)
        throw ParseError(li + 1, "non-numeric target '"
                                     + fields[target_cols[t]] + "'");
      values[target_names[t]] = *v;
    }
    if (!rows.emplace(fields[*key_col], std::move(values)).second)
      throw ParseError(li + 1, "duplicate name '" + fields[*key_col] + "'");
  }

  Dataset ds;
  std::size_t matched_rows = 0;
  for (Molecule &mol : molecules) {
    auto it = rows.find(mol.name);
    if (it == rows.end()) {
      ++ds.missing_targets;
      continue;
    }
    ++matched_rows;
    ds.records.push_back({ std::move(mol), it->second });
  }
  ds.missing_structures = rows.size() - matched_rows;

  if (ds.records.empty())
    throw DataError("no overlap between structures in "
                    + molecule_source.string() + " and targets in "
                    + targets_csv.string());
  if (ds.missing_targets > 0)
    ds.warnings.push_back(fmt::format("dropped {} structure(s) without targets",
                                      ds.missing_targets));
  if (ds.missing_structures > 0)
    ds.warnings.push_back(fmt::format(
        "dropped {} target row(s) without structures", ds.missing_structures));
  return ds;
}

std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n,
                                                      std::uint64_t seed) {
  if (n < 10)
    throw DataError(fmt::format("need at least 10 records to split, got {}", n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t cut1 = n * 8 / 10;
  const std::size_t cut2 = n * 9 / 10;
  return {
    std::vector<std::size_t>(order.begin(), order.begin() + cut1),
    std::vector<std::size_t>(order.begin() + cut1, order.begin() + cut2),
    std::vector<std::size_t>(order.begin() + cut2, order.end()),
  };
}

DatasetSplit split_dataset(std::span<const DatasetRecord> records,
                           std::uint64_t seed) {
  auto parts = split_indices(records.size(), seed);
  DatasetSplit out;
  std::vector<DatasetRecord> *dest[] = { &out.train, &out.val, &out.test };
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t i : parts[p])
      dest[p]->push_back(records[i]);
  }
  return out;
}

}  // namespace equihg
