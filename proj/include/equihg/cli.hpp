//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace equihg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitInternalError = 2;

/// Runs the command line `args` (args[0] is the program name). Exit codes:
/// 0 success, 1 user or data error, 2 internal invariant violation.
int run_cli(std::span<const std::string> args, std::ostream &out,
            std::ostream &err);

}  // namespace equihg
