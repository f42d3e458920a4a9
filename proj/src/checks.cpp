//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "equihg/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "equihg/error.hpp"

namespace equihg {

Vec3 RigidMotion::rotate(const Vec3 &p) const {
  Vec3 out{};
  for (std::size_t r = 0; r < 3; ++r)
    out[r] = rotation[r][0] * p[0] + rotation[r][1] * p[1]
             + rotation[r][2] * p[2];
  return out;
}

Vec3 RigidMotion::apply(const Vec3 &p) const {
  Vec3 out = rotate(p);
  for (std::size_t r = 0; r < 3; ++r)
    out[r] += translation[r];
  return out;
}

RigidMotion random_rigid_motion(std::mt19937_64 &rng, bool allow_reflection) {
  std::normal_distribution<double> gauss;
  double q[4];
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double &c : q) {
      c = gauss(rng);
      norm += c * c;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  const double w = q[0] / norm, x = q[1] / norm, y = q[2] / norm,
               z = q[3] / norm;

  RigidMotion g;
  g.rotation = { { { 1 - 2 * (y * y + z * z), 2 * (x * y - z * w),
                     2 * (x * z + y * w) },
                   { 2 * (x * y + z * w), 1 - 2 * (x * x + z * z),
                     2 * (y * z - x * w) },
                   { 2 * (x * z - y * w), 2 * (y * z + x * w),
                     1 - 2 * (x * x + y * y) } } };
  if (allow_reflection && std::bernoulli_distribution(0.5)(rng))
    for (auto &row : g.rotation)
      for (double &v : row)
        v = -v;
  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  for (double &t : g.translation)
    t = shift(rng);
  return g;
}

Molecule transformed(const Molecule &mol, const RigidMotion &g) {
  if (!mol.coords)
    throw Error("molecule '" + mol.name + "' has no 3D coordinates");
  Molecule out = mol;
  for (Vec3 &p : *out.coords)
    p = g.apply(p);
  return out;
}

std::vector<std::size_t> random_permutation(std::size_t n,
                                            std::mt19937_64 &rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{ 0 });
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

CheckReport check_rigid_invariance(const Model &model,
                                   std::span<const Molecule> mols,
                                   std::size_t motions, std::uint64_t seed) {
  CheckReport rep{ "rigid-motion invariance", 0.0, kEquivarianceTolerance, 0 };
  std::mt19937_64 rng(seed);
  for (const Molecule &mol : mols) {
    if (!mol.coords)
      throw Error("molecule '" + mol.name + "' has no 3D coordinates");
    const double base = model.predict(mol);
    for (std::size_t k = 0; k < motions; ++k) {
      const double moved =
          model.predict(transformed(mol, random_rigid_motion(rng)));
      rep.max_deviation = std::max(rep.max_deviation, std::abs(moved - base));
      ++rep.cases;
    }
  }
  return rep;
}

std::array<CheckReport, 2> check_encoder_equivariance(
    const GeoEncoder &encoder, double cutoff, std::size_t max_neighbors,
    std::span<const Molecule> mols, std::size_t motions, std::uint64_t seed) {
  CheckReport h_rep{ "encoder h-stream invariance", 0.0,
                     kEquivarianceTolerance, 0 };
  CheckReport x_rep{ "encoder x-stream equivariance", 0.0,
                     kEquivarianceTolerance, 0 };
  NoTapeScope no_tape;
  std::mt19937_64 rng(seed);
  for (const Molecule &mol : mols) {
    const GeoState base = encode_state(mol, encoder, cutoff, max_neighbors);
    const std::size_t n = mol.num_atoms();
    for (std::size_t k = 0; k < motions; ++k) {
      const RigidMotion g = random_rigid_motion(rng);
      const GeoState moved =
          encode_state(transformed(mol, g), encoder, cutoff, max_neighbors);
      const auto h0 = base.h.data(), h1 = moved.h.data();
      for (std::size_t i = 0; i < h0.size(); ++i)
        h_rep.max_deviation =
            std::max(h_rep.max_deviation, std::abs(h1[i] - h0[i]));
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3 expect = g.apply({ base.x.at(i, 0), base.x.at(i, 1),
                                      base.x.at(i, 2) });
        for (std::size_t c = 0; c < 3; ++c)
          x_rep.max_deviation = std::max(
              x_rep.max_deviation, std::abs(moved.x.at(i, c) - expect[c]));
      }
      ++h_rep.cases;
      ++x_rep.cases;
    }
  }
  return { h_rep, x_rep };
}

CheckReport check_permutation_invariance(const Model &model,
                                         std::span<const Molecule> mols,
                                         std::size_t perms,
                                         std::uint64_t seed) {
  CheckReport rep{ "permutation invariance", 0.0, kPermutationTolerance, 0 };
  std::mt19937_64 rng(seed);
  for (const Molecule &mol : mols) {
    const double base = model.predict(mol);
    for (std::size_t k = 0; k < perms; ++k) {
      const auto perm = random_permutation(mol.num_atoms(), rng);
      const double relabeled = model.predict(mol.permuted(perm));
      rep.max_deviation =
          std::max(rep.max_deviation, std::abs(relabeled - base));
      ++rep.cases;
    }
  }
  return rep;
}

CheckReport check_gradients(Model &model, const Molecule &mol, double step) {
  CheckReport rep{ "gradient check", 0.0, kGradcheckTolerance, 0 };
  const GraphSample sample = prepare_sample(mol, model.config());
  const Batch batch = make_batch(sample);
  std::vector<Tensor> params = model.params().tensors();
  rep.max_deviation = grad_check(
      [&] { return sum_all(model.forward(batch)); }, params, step);
  rep.cases = model.params().num_scalars();
  return rep;
}

}  // namespace equihg
