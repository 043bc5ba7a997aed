#include "thermesh/graph.hpp"

#include <cmath>

namespace thermesh {

Mat edge_features(const std::vector<int>& src, const std::vector<int>& dst,
                  const std::vector<Eigen::Vector2d>& coords_mm) {
  if (src.size() != dst.size()) throw ValidationError("edge_features: src/dst size mismatch");
  Mat feat(static_cast<Eigen::Index>(src.size()), 3);
  for (std::size_t e = 0; e < src.size(); ++e) {
    Eigen::Vector2d d = coords_mm[static_cast<std::size_t>(dst[e])] -
                        coords_mm[static_cast<std::size_t>(src[e])];
    double len = d.norm();
    if (len <= 0.0) {
      throw ValidationError("edge_features: zero-length edge between duplicate nodes " +
                            std::to_string(src[e]) + " and " + std::to_string(dst[e]));
    }
    feat(static_cast<Eigen::Index>(e), 0) = len;
    feat(static_cast<Eigen::Index>(e), 1) = d.x() / len;
    feat(static_cast<Eigen::Index>(e), 2) = d.y() / len;
  }
  return feat;
}

BatchedTopology batch_topologies(const std::vector<const GraphTopology*>& parts) {
  if (parts.empty()) throw ValidationError("batch_topologies: empty batch");
  BatchedTopology out;
  out.node_offset.push_back(0);
  out.edge_offset.push_back(0);
  int ncols = static_cast<int>(parts[0]->edge_feat.cols());
  int total_edges = 0;
  for (const GraphTopology* g : parts) {
    if (g->edge_feat.size() != 0 && g->edge_feat.cols() != ncols) {
      throw ValidationError("batch_topologies: edge feature dim mismatch");
    }
    total_edges += g->num_edges();
  }
  out.merged.edge_feat.resize(total_edges, ncols);
  for (std::size_t s = 0; s < parts.size(); ++s) {
    const GraphTopology& g = *parts[s];
    int nbase = out.node_offset.back();
    for (int e = 0; e < g.num_edges(); ++e) {
      out.merged.edge_src.push_back(g.edge_src[static_cast<std::size_t>(e)] + nbase);
      out.merged.edge_dst.push_back(g.edge_dst[static_cast<std::size_t>(e)] + nbase);
      out.merged.edge_feat.row(out.edge_offset.back() + e) = g.edge_feat.row(e);
    }
    for (int n = 0; n < g.num_nodes; ++n) out.node_sample.push_back(static_cast<int>(s));
    out.node_offset.push_back(nbase + g.num_nodes);
    out.edge_offset.push_back(out.edge_offset.back() + g.num_edges());
  }
  out.merged.num_nodes = out.node_offset.back();
  return out;
}

Mat batch_rows(const std::vector<Mat>& parts) {
  if (parts.empty()) throw ValidationError("batch_rows: empty batch");
  Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Mat& m : parts) {
    if (m.cols() != cols) throw ValidationError("batch_rows: feature dim mismatch");
    rows += m.rows();
  }
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const Mat& m : parts) {
    out.middleRows(at, m.rows()) = m;
    at += m.rows();
  }
  return out;
}

std::vector<Mat> unbatch_rows(const Mat& merged, const std::vector<int>& node_offset) {
  std::vector<Mat> out;
  for (std::size_t s = 0; s + 1 < node_offset.size(); ++s) {
    out.push_back(merged.middleRows(node_offset[s], node_offset[s + 1] - node_offset[s]));
  }
  return out;
}

}  // namespace thermesh
