//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "equihg/chem.hpp"
#include "equihg/hypergraph.hpp"
#include "equihg/nn.hpp"
#include "equihg/tensor.hpp"

namespace equihg {

/// Width of the raw atom descriptor: one-hot element, aromatic flag,
/// formal charge, bond count.
inline constexpr std::size_t kAtomFeatureDim = kNumElements + 3;

/// Raw [N, kAtomFeatureDim] descriptor, before the learned projection.
Tensor atom_features(const Molecule &mol);

/// Node state of the equivariant encoder. Edge k is the directed pair
/// (src[k], dst[k]); messages from dst are summed at src.
struct GeoState {
  Tensor h;  // [N, d] invariant features
  Tensor x;  // [N, 3] coordinates, Angstrom
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
};

GeoState make_geo_state(Tensor h, std::span<const Vec3> coords,
                        const RadiusGraph &graph);

/// One EGNN block: edge MLP on (h_i, h_j, |x_i - x_j|^2), residual node MLP
/// on (h_i, m_i), and a scalar gate on m_ij that moves x_i along
/// (x_i - x_j) / (|x_i - x_j| + 1), averaged over the neighbourhood.
struct EgnnLayer {
  Mlp edge_mlp;   // 2d+1 -> d -> d
  Mlp node_mlp;   // 2d -> d -> d
  Mlp coord_mlp;  // d -> d -> 1
};

EgnnLayer make_egnn_layer(ParamBuilder &b, const std::string &name,
                          std::size_t hidden);

GeoState egnn_layer_forward(const GeoState &state, const EgnnLayer &layer);

struct GeoEncoder {
  Linear embed;  // kAtomFeatureDim -> d
  std::vector<EgnnLayer> layers;

  /// Projects raw features and runs every layer.
  GeoState run(const Tensor &raw_features, std::span<const Vec3> coords,
               const RadiusGraph &graph) const;
  GeoState run(GeoState state) const;
};

GeoEncoder make_geo_encoder(ParamBuilder &b, const std::string &name,
                            std::size_t hidden, std::size_t num_layers);

/// Invariant embeddings [N, d] of a molecule with coordinates. The radius
/// graph is built from the molecule's own coordinates.
Tensor encode(const Molecule &mol, const GeoEncoder &encoder, double cutoff,
              std::size_t max_neighbors);

/// As encode(), but returns the full state including the coordinate stream.
GeoState encode_state(const Molecule &mol, const GeoEncoder &encoder,
                      double cutoff, std::size_t max_neighbors);

}  // namespace equihg
