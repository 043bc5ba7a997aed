#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thermesh/bundle.hpp"

namespace thermesh {

/// Minimal RGB image buffer with PNG output (zlib-compressed).
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Image(int w, int h, std::uint8_t r = 255, std::uint8_t g = 255, std::uint8_t b = 255);
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  void line(int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  void save_png(const std::string& path) const;
};

/// Blue-to-red heat colormap over [0, 1].
void heat_color(double v01, std::uint8_t* r, std::uint8_t* g, std::uint8_t* b);

/// Renders one temperature snapshot of a bundle record: element fill colored
/// by temperature, inactive region greyed, part boundary overlaid.
void render_field_snapshot(const SimulationBundle& bundle, int step, const std::string& path,
                           int width_px = 640);

/// Simple multi-series line plot (one polyline per series, auto-scaled axes).
void render_line_plot(const std::vector<std::vector<double>>& series,
                      const std::vector<std::string>& labels, const std::string& path,
                      int width_px = 800, int height_px = 480);

}  // namespace thermesh
