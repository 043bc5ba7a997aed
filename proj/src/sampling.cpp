#include "thermesh/sampling.hpp"

#include <numeric>

namespace thermesh {

Mat latin_hypercube(int n, int dims, RngStream& rng) {
  if (n < 1) throw ValidationError("latin_hypercube: n must be >= 1");
  Mat out(n, dims);
  std::vector<int> strata(static_cast<std::size_t>(n));
  for (int d = 0; d < dims; ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    rng.shuffle(strata);
    for (int i = 0; i < n; ++i) {
      out(i, d) = (strata[static_cast<std::size_t>(i)] + rng.uniform(0.0, 1.0)) / n;
    }
  }
  return out;
}

std::vector<GeometryParams> sample_designs(int n, std::uint64_t seed, const DesignBox& box) {
  RngStream rng(seed);
  Mat u = latin_hypercube(n, 7, rng);
  std::vector<GeometryParams> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto at = [&](int d) {
      const auto& [lo, hi] = box.bounds[static_cast<std::size_t>(d)];
      return lo + u(i, d) * (hi - lo);
    };
    GeometryParams p;
    p.base_width_mm = at(0);
    p.left_break_mm = at(1);
    p.right_break_mm = at(2);
    p.angle_l1 = at(3);
    p.angle_l2 = at(4);
    p.angle_r1 = at(5);
    p.angle_r2 = at(6);
    out.push_back(p);
  }
  return out;
}

}  // namespace thermesh
