#include "thermesh/geometry.hpp"

#include <cmath>

namespace thermesh {

namespace {

double polyline_x_at(const std::vector<Eigen::Vector2d>& poly, double y) {
  // poly has three vertices: base, break, top; y clamped to [0, top]
  if (y <= poly.front().y()) return poly.front().x();
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[i + 1];
    if (y <= b.y() || i + 2 == poly.size()) {
      double t = (y - a.y()) / (b.y() - a.y());
      return a.x() + t * (b.x() - a.x());
    }
  }
  return poly.back().x();
}

void check_angle(double a, const char* field) {
  if (!(a >= kPi / 4 - 1e-12 && a <= 3 * kPi / 4 + 1e-12)) {
    throw ValidationError(std::string("geometry: ") + field +
                          " out of range [pi/4, 3pi/4]: " + std::to_string(a));
  }
}

}  // namespace

double PartGeometry::left_x_at(double y_mm) const { return polyline_x_at(left_boundary, y_mm); }
double PartGeometry::right_x_at(double y_mm) const { return polyline_x_at(right_boundary, y_mm); }

double PartGeometry::average_width_mm() const {
  double acc = 0.0;
  for (const auto& [x0, x1] : extent_bottom) acc += x1 - x0;
  return acc / static_cast<double>(extent_bottom.size());
}

PartGeometry build_geometry(const GeometryParams& p, double height_mm, int layers) {
  if (!(p.base_width_mm >= 10.0 && p.base_width_mm <= 90.0)) {
    throw ValidationError("geometry: base_width_mm out of range [10, 90]: " +
                          std::to_string(p.base_width_mm));
  }
  check_angle(p.angle_l1, "angle_l1");
  check_angle(p.angle_l2, "angle_l2");
  check_angle(p.angle_r1, "angle_r1");
  check_angle(p.angle_r2, "angle_r2");
  if (height_mm <= 0.0) throw ValidationError("geometry: height_mm must be positive");
  if (layers < 1) throw ValidationError("geometry: layers must be >= 1");
  if (!(p.left_break_mm > 0.0 && p.left_break_mm < height_mm)) {
    throw ValidationError("geometry: left_break_mm must lie strictly inside (0, height)");
  }
  if (!(p.right_break_mm > 0.0 && p.right_break_mm < height_mm)) {
    throw ValidationError("geometry: right_break_mm must lie strictly inside (0, height)");
  }

  PartGeometry g;
  g.height_mm = height_mm;
  g.layers = layers;
  g.layer_thickness_mm = height_mm / layers;

  // Walls advance by dx/dy = -cot(angle) on the left side and +cot(angle) on
  // the right, so pi/2 gives a vertical wall and 3pi/4 leans both walls inward.
  auto cot = [](double a) { return std::cos(a) / std::sin(a); };
  double xl0 = -p.base_width_mm / 2, xr0 = p.base_width_mm / 2;
  double xl_break = xl0 - cot(p.angle_l1) * p.left_break_mm;
  double xr_break = xr0 + cot(p.angle_r1) * p.right_break_mm;
  double xl_top = xl_break - cot(p.angle_l2) * (height_mm - p.left_break_mm);
  double xr_top = xr_break + cot(p.angle_r2) * (height_mm - p.right_break_mm);
  g.left_boundary = {{xl0, 0.0}, {xl_break, p.left_break_mm}, {xl_top, height_mm}};
  g.right_boundary = {{xr0, 0.0}, {xr_break, p.right_break_mm}, {xr_top, height_mm}};

  for (int l = 0; l < layers; ++l) {
    double yb = l * g.layer_thickness_mm;
    double yt = (l + 1) * g.layer_thickness_mm;
    g.extent_bottom.emplace_back(g.left_x_at(yb), g.right_x_at(yb));
    g.extent_top.emplace_back(g.left_x_at(yt), g.right_x_at(yt));
    if (g.extent_bottom.back().second - g.extent_bottom.back().first <= 0.0 ||
        g.extent_top.back().second - g.extent_top.back().first <= 0.0) {
      throw ValidationError("geometry: layer " + std::to_string(l) +
                            " has non-positive metal width; side walls cross");
    }
  }
  return g;
}

}  // namespace thermesh
