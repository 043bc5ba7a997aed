#pragma once

#include <utility>
#include <vector>

#include "thermesh/common.hpp"

namespace thermesh {

/// Seven design variables controlling a two-dimensional part built from two
/// piecewise-linear side boundaries (two segments per side).
///
/// Angles are measured against the build plate; pi/2 is a vertical wall and
/// values toward pi/4 lean the wall outward (overhang), toward 3pi/4 inward.
struct GeometryParams {
  double base_width_mm = 50.0;  // w, [10, 90]
  double left_break_mm = 25.0;  // h_l, in (0, part height)
  double right_break_mm = 25.0;
  double angle_l1 = kPi / 2;  // [pi/4, 3pi/4]
  double angle_l2 = kPi / 2;
  double angle_r1 = kPi / 2;
  double angle_r2 = kPi / 2;
};

/// Resolved part outline: side polylines plus per-layer metal extents.
struct PartGeometry {
  double height_mm = 0.0;
  int layers = 0;
  double layer_thickness_mm = 0.0;
  // polyline vertices bottom to top: (x, y) in mm
  std::vector<Eigen::Vector2d> left_boundary;
  std::vector<Eigen::Vector2d> right_boundary;
  // metal [x_start, x_end] per layer, evaluated at the layer bottom
  std::vector<std::pair<double, double>> extent_bottom;
  // same, evaluated at the layer top (the surface that gets scanned)
  std::vector<std::pair<double, double>> extent_top;

  double left_x_at(double y_mm) const;
  double right_x_at(double y_mm) const;
  double width_at(double y_mm) const { return right_x_at(y_mm) - left_x_at(y_mm); }
  double average_width_mm() const;
};

/// Validates the seven parameters and resolves the part outline.
/// Throws ValidationError naming the offending field, or if any layer would
/// have non-positive metal width.
PartGeometry build_geometry(const GeometryParams& params, double height_mm, int layers);

}  // namespace thermesh
