//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "equihg/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "equihg/error.hpp"

namespace equihg {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos)
    return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, v));
  return out;
}

std::size_t parse_count(std::string_view key, std::string_view v) {
  if (!v.empty() && v.front() == '-')
    throw ConfigError(fmt::format("{}: '{}' must not be negative", key, v));
  return parse_number<std::size_t>(key, v);
}

}  // namespace

void apply_setting(RunConfig &cfg, std::string_view section,
                   std::string_view key, std::string_view value) {
  const std::string full = fmt::format("{}.{}", section, key);
  const auto count = [&] { return parse_count(full, value); };
  const auto real = [&] { return parse_number<double>(full, value); };
  const auto seed = [&] { return parse_number<std::uint64_t>(full, value); };

  if (section == "model") {
    ModelConfig &m = cfg.model;
    if (key == "kind")
      m.kind = model_kind_from_string(value);
    else if (key == "hidden")
      m.hidden = count();
    else if (key == "geo_layers")
      m.geo_layers = count();
    else if (key == "hg_layers")
      m.hg_layers = count();
    else if (key == "head_layers")
      m.head_layers = count();
    else if (key == "cutoff")
      m.cutoff = real();
    else if (key == "max_neighbors")
      m.max_neighbors = count();
    else if (key == "seed")
      m.seed = seed();
    else
      throw ConfigError("unknown setting '" + full + "'");
  } else if (section == "train") {
    TrainConfig &t = cfg.train;
    if (key == "epochs")
      t.epochs = count();
    else if (key == "batch_size")
      t.batch_size = count();
    else if (key == "lr")
      t.lr = real();
    else if (key == "seed")
      t.seed = seed();
    else if (key == "target")
      t.target_name = std::string(value);
    else if (key == "eval_every")
      t.eval_every = count();
    else if (key == "out_dir")
      t.out_dir = std::string(value);
    else
      throw ConfigError("unknown setting '" + full + "'");
  } else if (section == "data") {
    DataConfig &d = cfg.data;
    if (key == "molecules")
      d.molecules = std::string(value);
    else if (key == "targets")
      d.targets = std::string(value);
    else if (key == "n")
      d.n = count();
    else if (key == "split_seed")
      d.split_seed = seed();
    else
      throw ConfigError("unknown setting '" + full + "'");
  } else {
    throw ConfigError(fmt::format("unknown section [{}]", section));
  }
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto c = line.find_first_of("#;"); c != std::string_view::npos)
      line = line.substr(0, c);
    line = trim(line);
    if (line.empty())
      continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("unterminated section header");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        if (section != "model" && section != "train" && section != "data")
          throw ConfigError(fmt::format("unknown section [{}]", section));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError("expected 'key = value'");
      if (section.empty())
        throw ConfigError("setting outside of a section");
      const std::string_view key = trim(line.substr(0, eq));
      std::string_view value = trim(line.substr(eq + 1));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        value = value.substr(1, value.size() - 2);
      apply_setting(cfg, section, key, value);
    } catch (const ConfigError &e) {
      throw ConfigError(fmt::format("config line {}: {}", line_no, e.what()));
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_config(ss.str());
  // Relative data paths are resolved against the config file's directory.
  const auto base = path.parent_path();
  for (auto *p : { &cfg.data.molecules, &cfg.data.targets })
    if (!p->empty() && p->is_relative())
      *p = base / *p;
  return cfg;
}

}  // namespace equihg
