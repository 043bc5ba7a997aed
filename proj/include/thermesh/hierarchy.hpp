#pragma once

#include <vector>

#include "thermesh/mesh.hpp"

namespace thermesh {

/// One level of the coarsening hierarchy. `nodes` lists the original mesh
/// node ids retained at this level (ascending); `topo` uses level-local
/// indices.
struct HierarchyLevel {
  std::vector<int> nodes;
  std::vector<int> local_of;  // original node id -> local index, -1 if absent
  GraphTopology topo;
};

/// Flattened fine-neighbor sets for pooling level p -> p+1. Entry k pools the
/// fine node fine_src[k] (level-p local index) into coarse_dst[k] (level-p+1
/// local index) with geometric feature edge_feat.row(k) pointing fine->coarse
/// target.
struct PoolMap {
  std::vector<int> fine_src;
  std::vector<int> coarse_dst;
  Mat edge_feat;
};

/// Nearest-coarse-node map for unpooling level p+1 -> p: one entry per fine
/// node, feature points coarse->fine.
struct UnpoolMap {
  std::vector<int> coarse_src;
  Mat edge_feat;
};

/// Deterministic nested coarsening of the structured mesh: level p keeps grid
/// nodes whose (row, col) are multiples of 2^p, and always keeps domain
/// boundary and metal-powder interface nodes. Coarse edges connect retained
/// nodes within graph distance 2 of each other on the finer level.
struct MeshHierarchy {
  std::vector<HierarchyLevel> levels;  // size depth + 1, levels[0] = input mesh
  std::vector<PoolMap> pools;          // size depth
  std::vector<UnpoolMap> unpools;      // size depth

  int depth() const { return static_cast<int>(pools.size()); }
  /// Number of levels that actually shrank; a too-deep request plateaus.
  int achieved_depth() const;
  const HierarchyLevel& latent_level() const { return levels.back(); }

  /// Restricts per-node rows (full mesh order) to a level's node set.
  Mat restrict_rows(const Mat& full, int level) const;
};

MeshHierarchy build_hierarchy(const LayeredMesh& mesh, int depth);

}  // namespace thermesh
