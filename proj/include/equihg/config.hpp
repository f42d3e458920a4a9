//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "equihg/model.hpp"
#include "equihg/trainer.hpp"

namespace equihg {

struct DataConfig {
  std::filesystem::path molecules;  // SDF, XYZ, XYZ directory or SMILES list
  std::filesystem::path targets;    // CSV keyed by `name`
  std::size_t n = 0;                // use the first n structures; 0 = all
  std::uint64_t split_seed = 0;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
};

/// Line-oriented `key = value` text with `[model]`, `[train]` and `[data]`
/// sections. `#` and `;` start comments. Unknown keys are errors.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path &path);

/// Sets one `section.key` value, with the same parsing as the file.
void apply_setting(RunConfig &cfg, std::string_view section,
                   std::string_view key, std::string_view value);

}  // namespace equihg
