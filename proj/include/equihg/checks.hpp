//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "equihg/chem.hpp"
#include "equihg/geo.hpp"
#include "equihg/model.hpp"

namespace equihg {

/// x -> R x + t, where R is orthogonal (det +1 or -1).
struct RigidMotion {
  std::array<std::array<double, 3>, 3> rotation{};
  Vec3 translation{};

  Vec3 apply(const Vec3 &p) const;
  /// R p, without the translation.
  Vec3 rotate(const Vec3 &p) const;
};

/// Uniform rotation (random unit quaternion), translation uniform in
/// [-10, 10]^3 Angstrom; with allow_reflection, half the draws are improper.
RigidMotion random_rigid_motion(std::mt19937_64 &rng,
                                bool allow_reflection = true);

Molecule transformed(const Molecule &mol, const RigidMotion &g);

std::vector<std::size_t> random_permutation(std::size_t n,
                                            std::mt19937_64 &rng);

struct CheckReport {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  std::size_t cases = 0;

  bool passed() const { return max_deviation <= tolerance; }
};

inline constexpr double kEquivarianceTolerance = 1e-5;
inline constexpr double kPermutationTolerance = 1e-10;
inline constexpr double kGradcheckTolerance = 1e-5;

/// max |pred(g.x) - pred(x)| over molecules and random rigid motions.
/// Throws Error for molecules without coordinates.
CheckReport check_rigid_invariance(const Model &model,
                                   std::span<const Molecule> mols,
                                   std::size_t motions, std::uint64_t seed);

/// Encoder streams under rigid motions: the h stream must not change, the
/// x stream must move with the input. Returns {h report, x report}.
std::array<CheckReport, 2> check_encoder_equivariance(
    const GeoEncoder &encoder, double cutoff, std::size_t max_neighbors,
    std::span<const Molecule> mols, std::size_t motions, std::uint64_t seed);

/// max |pred(pi.mol) - pred(mol)| over random atom relabelings.
CheckReport check_permutation_invariance(const Model &model,
                                         std::span<const Molecule> mols,
                                         std::size_t perms,
                                         std::uint64_t seed);

/// Central-difference check of d pred / d theta over every parameter.
CheckReport check_gradients(Model &model, const Molecule &mol,
                            double step = 1e-5);

}  // namespace equihg
