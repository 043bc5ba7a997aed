#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "thermesh/geometry.hpp"

namespace thermesh {

/// Sampling box for the seven design variables, in the order
/// w, h_l, h_r, angle_l1, angle_l2, angle_r1, angle_r2.
struct DesignBox {
  std::array<std::pair<double, double>, 7> bounds;
};

/// Plain Latin hypercube in the unit cube: each 1-D marginal places exactly
/// one sample per 1/n stratum. Deterministic given the stream.
Mat latin_hypercube(int n, int dims, RngStream& rng);

/// Latin-hypercube sample of geometry parameter sets over the box.
std::vector<GeometryParams> sample_designs(int n, std::uint64_t seed, const DesignBox& box);

}  // namespace thermesh
