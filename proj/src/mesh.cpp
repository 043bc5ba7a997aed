#include "thermesh/mesh.hpp"

#include <algorithm>
#include <cmath>

namespace thermesh {

namespace {

/// Canonical powder column widths growing away from the part: base size times
/// growth^k, capped. Returns enough columns to cover `span`.
std::vector<double> powder_profile(double span, double base, double growth, double cap) {
  std::vector<double> sizes;
  double acc = 0.0;
  double s = base;
  while (acc < span) {
    s = std::min(s * growth, cap);
    sizes.push_back(s);
    acc += s;
    if (sizes.size() > 100000) throw ComputeError("powder_profile: did not cover span");
  }
  return sizes;
}

}  // namespace

GraphTopology LayeredMesh::graph() const {
  GraphTopology g;
  g.num_nodes = num_nodes();
  auto add_both = [&](int a, int b) {
    g.edge_src.push_back(a);
    g.edge_dst.push_back(b);
    g.edge_src.push_back(b);
    g.edge_dst.push_back(a);
  };
  for (int r = 0; r <= grid_rows; ++r) {
    for (int c = 0; c <= grid_cols; ++c) {
      if (c < grid_cols) add_both(node_id(r, c), node_id(r, c + 1));
      if (r < grid_rows) add_both(node_id(r, c), node_id(r + 1, c));
    }
  }
  g.edge_feat = edge_features(g.edge_src, g.edge_dst, coords_mm);
  return g;
}

Vec MaskPair::active_vec() const {
  Vec v(static_cast<Eigen::Index>(active.size()));
  for (std::size_t i = 0; i < active.size(); ++i) v(static_cast<Eigen::Index>(i)) = active[i];
  return v;
}

Vec MaskPair::material_vec() const {
  Vec v(static_cast<Eigen::Index>(material.size()));
  for (std::size_t i = 0; i < material.size(); ++i) v(static_cast<Eigen::Index>(i)) = material[i];
  return v;
}

LayeredMesh generate_mesh(const PartGeometry& geom, const MeshConfig& cfg) {
  if (cfg.powder_growth < 1.0) throw ValidationError("mesh: powder_growth must be >= 1");
  if (cfg.rows_per_layer < 1) throw ValidationError("mesh: rows_per_layer must be >= 1");

  double half_domain = cfg.domain_width_mm / 2;
  for (int l = 0; l < geom.layers; ++l) {
    if (geom.extent_bottom[l].second - geom.extent_bottom[l].first <= 0.0) {
      throw ComputeError("mesh: degenerate zero-width layer " + std::to_string(l));
    }
    if (geom.extent_bottom[l].first <= -half_domain || geom.extent_bottom[l].second >= half_domain ||
        geom.extent_top[l].first <= -half_domain || geom.extent_top[l].second >= half_domain) {
      throw ValidationError("mesh: domain_width_mm does not enclose the part");
    }
  }

  LayeredMesh m;
  m.num_layers = geom.layers;
  m.rows_per_layer = cfg.rows_per_layer;
  m.layer_thickness_mm = geom.layer_thickness_mm;
  m.grid_rows = geom.layers * cfg.rows_per_layer;
  m.metal_extent_top_mm = geom.extent_top;

  // Element count inside the part comes from the average layer width.
  double avg_w = geom.average_width_mm();
  int n_metal = std::max(2, static_cast<int>(std::llround(avg_w / cfg.metal_elem_mm)));
  double base_size = avg_w / n_metal;

  double row_dy = geom.layer_thickness_mm / cfg.rows_per_layer;
  double span_left = 0.0, span_right = 0.0;
  for (int r = 0; r <= m.grid_rows; ++r) {
    double y = r * row_dy;
    span_left = std::max(span_left, geom.left_x_at(y) + half_domain);
    span_right = std::max(span_right, half_domain - geom.right_x_at(y));
  }
  std::vector<double> prof_left =
      powder_profile(span_left, base_size, cfg.powder_growth, cfg.powder_max_elem_mm);
  std::vector<double> prof_right =
      powder_profile(span_right, base_size, cfg.powder_growth, cfg.powder_max_elem_mm);
  int n_pl = static_cast<int>(prof_left.size());
  int n_pr = static_cast<int>(prof_right.size());

  m.powder_cols_left = n_pl;
  m.metal_cols = n_metal;
  m.grid_cols = n_pl + n_metal + n_pr;

  // cumulative fractions of the canonical profiles, outermost first
  auto cumfrac = [](const std::vector<double>& sizes) {
    double total = 0.0;
    for (double s : sizes) total += s;
    std::vector<double> cf(sizes.size() + 1, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      acc += sizes[i];
      cf[i + 1] = acc / total;
    }
    return cf;
  };
  std::vector<double> cf_left = cumfrac(prof_left);
  std::vector<double> cf_right = cumfrac(prof_right);

  m.coords_mm.resize(static_cast<std::size_t>((m.grid_rows + 1) * (m.grid_cols + 1)));
  for (int r = 0; r <= m.grid_rows; ++r) {
    double y = r * row_dy;
    double xl = geom.left_x_at(y);
    double xr = geom.right_x_at(y);
    for (int c = 0; c <= m.grid_cols; ++c) {
      double x;
      if (c < n_pl) {
        // powder, left: c = 0 is the domain edge
        double frac = cf_left[static_cast<std::size_t>(n_pl - c)];
        x = xl - frac * (xl + half_domain);
      } else if (c <= n_pl + n_metal) {
        x = xl + (xr - xl) * (c - n_pl) / static_cast<double>(n_metal);
      } else {
        double frac = cf_right[static_cast<std::size_t>(c - n_pl - n_metal)];
        x = xr + frac * (half_domain - xr);
      }
      m.coords_mm[static_cast<std::size_t>(m.node_id(r, c))] = {x, y};
    }
  }

  for (int r = 0; r < m.grid_rows; ++r) {
    for (int c = 0; c < m.grid_cols; ++c) {
      m.elems.push_back({m.node_id(r, c), m.node_id(r, c + 1), m.node_id(r + 1, c + 1),
                         m.node_id(r + 1, c)});
      m.elem_layer.push_back(r / cfg.rows_per_layer);
      m.elem_is_metal.push_back(c >= n_pl && c < n_pl + n_metal ? 1 : 0);
    }
  }

  m.node_is_metal.assign(static_cast<std::size_t>(m.num_nodes()), 0);
  m.node_on_boundary.assign(static_cast<std::size_t>(m.num_nodes()), 0);
  m.node_on_interface.assign(static_cast<std::size_t>(m.num_nodes()), 0);
  for (int r = 0; r <= m.grid_rows; ++r) {
    for (int c = 0; c <= m.grid_cols; ++c) {
      int id = m.node_id(r, c);
      if (c >= n_pl && c <= n_pl + n_metal) m.node_is_metal[static_cast<std::size_t>(id)] = 1;
      if (r == 0 || r == m.grid_rows || c == 0 || c == m.grid_cols) {
        m.node_on_boundary[static_cast<std::size_t>(id)] = 1;
      }
      if (c == n_pl || c == n_pl + n_metal) {
        m.node_on_interface[static_cast<std::size_t>(id)] = 1;
      }
    }
  }
  return m;
}

MaskPair activation_masks(const LayeredMesh& mesh, int layer) {
  if (layer < 0 || layer >= mesh.num_layers) {
    throw ValidationError("activation_masks: layer " + std::to_string(layer) +
                          " out of range [0, " + std::to_string(mesh.num_layers) + ")");
  }
  MaskPair mp;
  mp.active.assign(static_cast<std::size_t>(mesh.num_nodes()), 0);
  mp.material.assign(static_cast<std::size_t>(mesh.num_nodes()), 0);
  int top_row = mesh.top_row_of_layer(layer);
  for (int r = 0; r <= top_row; ++r) {
    for (int c = 0; c <= mesh.grid_cols; ++c) {
      int id = mesh.node_id(r, c);
      mp.active[static_cast<std::size_t>(id)] = 1;
      mp.material[static_cast<std::size_t>(id)] = mesh.node_is_metal[static_cast<std::size_t>(id)];
    }
  }
  return mp;
}

}  // namespace thermesh
