#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "thermesh/geometry.hpp"
#include "thermesh/graph.hpp"

namespace thermesh {

struct MeshConfig {
  double domain_width_mm = 150.0;    // must exceed the widest part extent
  double metal_elem_mm = 1.0;        // target metal element width
  double powder_growth = 1.3;        // geometric coarsening ratio, >= 1
  double powder_max_elem_mm = 4.0;   // cap on powder element width
  int rows_per_layer = 1;            // element rows per deposited layer
};

/// Structured boundary-fitted quadrilateral mesh. Nodes form a logical
/// (rows+1) x (cols+1) grid; vertical grid lines follow the part side walls,
/// so the metal-powder interface is mesh-conforming. Element count per layer
/// is identical across layers; powder columns widen geometrically away from
/// the part.
struct LayeredMesh {
  int grid_rows = 0;  // element rows
  int grid_cols = 0;  // element columns
  int powder_cols_left = 0;
  int metal_cols = 0;
  int num_layers = 0;
  int rows_per_layer = 1;
  double layer_thickness_mm = 0.0;

  std::vector<Eigen::Vector2d> coords_mm;          // node id = r * (grid_cols+1) + c
  std::vector<std::array<int, 4>> elems;           // CCW: (r,c) (r,c+1) (r+1,c+1) (r+1,c)
  std::vector<int> elem_layer;                     // deposition layer per element
  std::vector<std::uint8_t> elem_is_metal;
  std::vector<std::uint8_t> node_is_metal;         // touches a metal element
  std::vector<std::uint8_t> node_on_boundary;      // outer domain rectangle
  std::vector<std::uint8_t> node_on_interface;     // metal-powder wall
  std::vector<std::pair<double, double>> metal_extent_top_mm;  // per layer

  int num_nodes() const { return static_cast<int>(coords_mm.size()); }
  int num_elems() const { return static_cast<int>(elems.size()); }
  int node_id(int r, int c) const { return r * (grid_cols + 1) + c; }
  int node_row(int n) const { return n / (grid_cols + 1); }
  int node_col(int n) const { return n % (grid_cols + 1); }
  int elems_per_layer() const { return grid_cols * rows_per_layer; }
  /// Last node row that exists once `layer` is deposited.
  int top_row_of_layer(int layer) const { return (layer + 1) * rows_per_layer; }

  /// 4-neighborhood graph over grid nodes with geometric edge features.
  GraphTopology graph() const;
};

/// Per-node activation and material indicators at one deposition state.
struct MaskPair {
  std::vector<std::uint8_t> active;    // node belongs to a deposited layer
  std::vector<std::uint8_t> material;  // 1 = metal, only meaningful when active

  Vec active_vec() const;
  Vec material_vec() const;
};

LayeredMesh generate_mesh(const PartGeometry& geom, const MeshConfig& cfg);

/// Masks once layers 0..layer are deposited. Inactive nodes carry zeros in
/// both masks; masks grow monotonically with the layer index.
MaskPair activation_masks(const LayeredMesh& mesh, int layer);

}  // namespace thermesh
