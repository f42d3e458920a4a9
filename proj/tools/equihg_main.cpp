//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <iostream>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "equihg/cli.hpp"

int main(int argc, char **argv) {
#if defined(__GLIBC__)
  // Tape buffers are allocated and freed every step; keeping them on the
  // heap instead of mmap/munmap saves a lot of kernel time.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  std::vector<std::string> args(argv, argv + argc);
  return equihg::run_cli(args, std::cout, std::cerr);
}
