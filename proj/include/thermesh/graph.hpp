#pragma once

#include <vector>

#include "thermesh/common.hpp"

namespace thermesh {

/// Directed edge list with per-edge geometric features. Mesh edges are stored
/// in both directions so that reversed edges carry antiparallel unit vectors.
struct GraphTopology {
  int num_nodes = 0;
  std::vector<int> edge_src;
  std::vector<int> edge_dst;
  Mat edge_feat;  // [num_edges x 3]: length_mm, unit dx, unit dy

  int num_edges() const { return static_cast<int>(edge_src.size()); }
};

/// Computes (length, unit direction) features for the given directed edges.
/// Throws on zero-length edges (duplicate nodes).
Mat edge_features(const std::vector<int>& src, const std::vector<int>& dst,
                  const std::vector<Eigen::Vector2d>& coords_mm);

/// Disjoint union of graphs for minibatching. No cross-sample edges are
/// introduced and per-sample node counts stay recoverable.
struct BatchedTopology {
  GraphTopology merged;
  std::vector<int> node_offset;  // size = samples + 1
  std::vector<int> edge_offset;  // size = samples + 1
  std::vector<int> node_sample;  // per merged node: sample index

  int samples() const { return static_cast<int>(node_offset.size()) - 1; }
  int nodes_of(int s) const { return node_offset[s + 1] - node_offset[s]; }
};

BatchedTopology batch_topologies(const std::vector<const GraphTopology*>& parts);

/// Vertically stacks per-sample feature matrices (inverse of unbatch_rows).
Mat batch_rows(const std::vector<Mat>& parts);
std::vector<Mat> unbatch_rows(const Mat& merged, const std::vector<int>& node_offset);

}  // namespace thermesh
