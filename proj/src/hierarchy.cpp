#include "thermesh/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace thermesh {

namespace {

std::vector<std::vector<int>> adjacency_lists(const GraphTopology& topo) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(topo.num_nodes));
  for (int e = 0; e < topo.num_edges(); ++e) {
    adj[static_cast<std::size_t>(topo.edge_src[static_cast<std::size_t>(e)])].push_back(
        topo.edge_dst[static_cast<std::size_t>(e)]);
  }
  return adj;
}

}  // namespace

int MeshHierarchy::achieved_depth() const {
  int d = 0;
  for (std::size_t p = 1; p < levels.size(); ++p) {
    if (levels[p].nodes.size() < levels[p - 1].nodes.size()) d = static_cast<int>(p);
  }
  return d;
}

Mat MeshHierarchy::restrict_rows(const Mat& full, int level) const {
  const auto& nodes = levels[static_cast<std::size_t>(level)].nodes;
  Mat out(static_cast<Eigen::Index>(nodes.size()), full.cols());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = full.row(nodes[i]);
  }
  return out;
}

MeshHierarchy build_hierarchy(const LayeredMesh& mesh, int depth) {
  if (depth < 0) throw ValidationError("build_hierarchy: depth must be >= 0");

  MeshHierarchy h;
  HierarchyLevel base;
  base.nodes.resize(static_cast<std::size_t>(mesh.num_nodes()));
  for (int i = 0; i < mesh.num_nodes(); ++i) base.nodes[static_cast<std::size_t>(i)] = i;
  base.local_of = base.nodes;
  base.topo = mesh.graph();
  h.levels.push_back(std::move(base));

  for (int p = 0; p < depth; ++p) {
    const HierarchyLevel& fine = h.levels.back();
    long stride = 1L << (p + 1);

    HierarchyLevel coarse;
    coarse.local_of.assign(static_cast<std::size_t>(mesh.num_nodes()), -1);
    for (int orig : fine.nodes) {
      int r = mesh.node_row(orig), c = mesh.node_col(orig);
      bool parity_keep = (r % stride == 0) && (c % stride == 0);
      bool forced = mesh.node_on_boundary[static_cast<std::size_t>(orig)] != 0 ||
                    mesh.node_on_interface[static_cast<std::size_t>(orig)] != 0;
      if (parity_keep || forced) {
        coarse.local_of[static_cast<std::size_t>(orig)] = static_cast<int>(coarse.nodes.size());
        coarse.nodes.push_back(orig);
      }
    }

    std::vector<std::vector<int>> adj = adjacency_lists(fine.topo);
    std::vector<int> fine_local_of_orig = fine.local_of;

    // coarse adjacency: retained nodes within fine-graph distance <= 2
    std::vector<int> csrc, cdst;
    for (std::size_t ci = 0; ci < coarse.nodes.size(); ++ci) {
      int u_local = fine_local_of_orig[static_cast<std::size_t>(coarse.nodes[ci])];
      std::set<int> reach;  // ordered for determinism
      for (int v : adj[static_cast<std::size_t>(u_local)]) {
        reach.insert(v);
        for (int w : adj[static_cast<std::size_t>(v)]) reach.insert(w);
      }
      for (int v_local : reach) {
        if (v_local == u_local) continue;
        int v_orig = fine.nodes[static_cast<std::size_t>(v_local)];
        int v_coarse = coarse.local_of[static_cast<std::size_t>(v_orig)];
        if (v_coarse < 0) continue;
        csrc.push_back(static_cast<int>(ci));
        cdst.push_back(v_coarse);
      }
    }
    std::vector<Eigen::Vector2d> ccoords(coarse.nodes.size());
    for (std::size_t i = 0; i < coarse.nodes.size(); ++i) {
      ccoords[i] = mesh.coords_mm[static_cast<std::size_t>(coarse.nodes[i])];
    }
    coarse.topo.num_nodes = static_cast<int>(coarse.nodes.size());
    coarse.topo.edge_src = csrc;
    coarse.topo.edge_dst = cdst;
    coarse.topo.edge_feat = edge_features(csrc, cdst, ccoords);

    // pooling sets: fine-graph neighbors of each retained node
    PoolMap pool;
    {
      std::vector<int> psrc_orig, pdst_orig;
      for (std::size_t ci = 0; ci < coarse.nodes.size(); ++ci) {
        int u_local = fine_local_of_orig[static_cast<std::size_t>(coarse.nodes[ci])];
        std::set<int> nbrs(adj[static_cast<std::size_t>(u_local)].begin(),
                           adj[static_cast<std::size_t>(u_local)].end());
        if (nbrs.empty()) {
          throw ComputeError("build_hierarchy: retained node without fine neighbors");
        }
        for (int v_local : nbrs) {
          pool.fine_src.push_back(v_local);
          pool.coarse_dst.push_back(static_cast<int>(ci));
          psrc_orig.push_back(fine.nodes[static_cast<std::size_t>(v_local)]);
          pdst_orig.push_back(coarse.nodes[ci]);
        }
      }
      pool.edge_feat = edge_features(psrc_orig, pdst_orig, mesh.coords_mm);
    }

    // unpooling: nearest coarse node per fine node, ties to the lowest id
    UnpoolMap unpool;
    unpool.coarse_src.resize(fine.nodes.size());
    unpool.edge_feat.resize(static_cast<Eigen::Index>(fine.nodes.size()), 3);
    for (std::size_t fi = 0; fi < fine.nodes.size(); ++fi) {
      Eigen::Vector2d pf = mesh.coords_mm[static_cast<std::size_t>(fine.nodes[fi])];
      double best = std::numeric_limits<double>::infinity();
      int best_c = -1;
      for (std::size_t ci = 0; ci < coarse.nodes.size(); ++ci) {
        double d2 = (ccoords[ci] - pf).squaredNorm();
        if (d2 < best) {  // exact ties keep the lowest index
          best = d2;
          best_c = static_cast<int>(ci);
        }
      }
      unpool.coarse_src[fi] = best_c;
      Eigen::Vector2d d = pf - ccoords[static_cast<std::size_t>(best_c)];
      double len = d.norm();
      unpool.edge_feat(static_cast<Eigen::Index>(fi), 0) = len;
      unpool.edge_feat(static_cast<Eigen::Index>(fi), 1) = len > 0 ? d.x() / len : 0.0;
      unpool.edge_feat(static_cast<Eigen::Index>(fi), 2) = len > 0 ? d.y() / len : 0.0;
    }

    h.pools.push_back(std::move(pool));
    h.unpools.push_back(std::move(unpool));
    h.levels.push_back(std::move(coarse));
  }
  return h;
}

}  // namespace thermesh
