#include "thermesh/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace thermesh {

namespace {

void put_u32_be(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>((v >> 24) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_u32_be(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
  put_u32_be(out, crc);
}

}  // namespace

Image::Image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < rgb.size(); i += 3) {
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }
}

void Image::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  std::size_t at = 3 * (static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x));
  rgb[at] = r;
  rgb[at + 1] = g;
  rgb[at + 2] = b;
}

void Image::line(int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set(x0, y0, r, g, b);
    if (x0 == x1 && y0 == y1) break;
    int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Image::save_png(const std::string& path) const {
  // filter byte 0 per scanline
  std::string raw;
  raw.reserve(static_cast<std::size_t>(height) * (1 + 3 * static_cast<std::size_t>(width)));
  for (int y = 0; y < height; ++y) {
    raw.push_back('\0');
    raw.append(reinterpret_cast<const char*>(&rgb[3 * static_cast<std::size_t>(y) * width]),
               3 * static_cast<std::size_t>(width));
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string compressed(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                6) != Z_OK) {
    throw ComputeError("png: deflate failed");
  }
  compressed.resize(bound);

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", compressed);
  put_chunk(out, "IEND", "");

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ComputeError("png: cannot open " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

void heat_color(double v, std::uint8_t* r, std::uint8_t* g, std::uint8_t* b) {
  v = std::clamp(v, 0.0, 1.0);
  // dark blue -> cyan -> yellow -> red
  double rr = std::clamp(std::min(4 * v - 1.5, -4 * v + 4.5), 0.0, 1.0);
  double gg = std::clamp(std::min(4 * v - 0.5, -4 * v + 3.5), 0.0, 1.0);
  double bb = std::clamp(std::min(4 * v + 0.5, -4 * v + 2.5), 0.0, 1.0);
  *r = static_cast<std::uint8_t>(255 * rr);
  *g = static_cast<std::uint8_t>(255 * gg);
  *b = static_cast<std::uint8_t>(255 * bb);
}

void render_field_snapshot(const SimulationBundle& b, int step, const std::string& path,
                           int width_px) {
  if (step < 0 || step >= b.num_steps()) throw ValidationError("render: step out of range");
  const LayeredMesh& m = b.mesh;
  double x0 = m.coords_mm[0].x();
  double x1 = m.coords_mm[static_cast<std::size_t>(m.grid_cols)].x();
  double y1 = m.num_layers * m.layer_thickness_mm;
  double aspect = y1 / (x1 - x0);
  int height_px = std::max(48, static_cast<int>(width_px * aspect));
  Image img(width_px, height_px, 235, 235, 235);

  double tmin = b.temps_c[static_cast<std::size_t>(step)].minCoeff();
  double tmax = kTempMaxC;
  for (int i = 0; i < m.num_nodes(); ++i) {
    if (b.active[static_cast<std::size_t>(step)][static_cast<std::size_t>(i)]) {
      tmax = std::max(tmax, b.temps_c[static_cast<std::size_t>(step)](i));
    }
  }
  (void)tmin;

  // paint active elements cell-by-cell
  for (int e = 0; e < m.num_elems(); ++e) {
    const auto& q = m.elems[static_cast<std::size_t>(e)];
    bool active = true;
    for (int k = 0; k < 4; ++k) {
      active = active &&
               b.active[static_cast<std::size_t>(step)][static_cast<std::size_t>(q[static_cast<std::size_t>(k)])] != 0;
    }
    if (!active) continue;
    double ex0 = m.coords_mm[static_cast<std::size_t>(q[0])].x();
    double ex1 = m.coords_mm[static_cast<std::size_t>(q[1])].x();
    double ey0 = m.coords_mm[static_cast<std::size_t>(q[0])].y();
    double ey1 = m.coords_mm[static_cast<std::size_t>(q[3])].y();
    double tavg = 0.0;
    for (int k = 0; k < 4; ++k) {
      tavg += b.temps_c[static_cast<std::size_t>(step)](q[static_cast<std::size_t>(k)]) / 4.0;
    }
    double v = normalize_temp(tavg);
    std::uint8_t cr, cg, cb;
    heat_color(v * (kTempMaxC - kTempMinC) / (tmax - kTempMinC + 1e-9), &cr, &cg, &cb);
    int px0 = static_cast<int>((ex0 - x0) / (x1 - x0) * (width_px - 1));
    int px1 = static_cast<int>((ex1 - x0) / (x1 - x0) * (width_px - 1));
    int py0 = static_cast<int>((1.0 - ey1 / y1) * (height_px - 1));
    int py1 = static_cast<int>((1.0 - ey0 / y1) * (height_px - 1));
    for (int py = py0; py <= py1; ++py) {
      for (int px = px0; px <= px1; ++px) img.set(px, py, cr, cg, cb);
    }
  }

  // part boundary overlay (interface columns), in green
  for (int r = 0; r < m.grid_rows; ++r) {
    for (int c : {m.powder_cols_left, m.powder_cols_left + m.metal_cols}) {
      const auto& pa = m.coords_mm[static_cast<std::size_t>(m.node_id(r, c))];
      const auto& pb = m.coords_mm[static_cast<std::size_t>(m.node_id(r + 1, c))];
      int ax = static_cast<int>((pa.x() - x0) / (x1 - x0) * (width_px - 1));
      int ay = static_cast<int>((1.0 - pa.y() / y1) * (height_px - 1));
      int bx = static_cast<int>((pb.x() - x0) / (x1 - x0) * (width_px - 1));
      int by = static_cast<int>((1.0 - pb.y() / y1) * (height_px - 1));
      img.line(ax, ay, bx, by, 0, 160, 0);
    }
  }
  img.save_png(path);
}

void render_line_plot(const std::vector<std::vector<double>>& series,
                      const std::vector<std::string>& labels, const std::string& path,
                      int width_px, int height_px) {
  if (series.empty()) throw ValidationError("plot: no series");
  Image img(width_px, height_px);
  const int ml = 60, mr = 20, mt = 20, mb = 40;
  double vmax = 0.0, vmin = 0.0;
  std::size_t n = 1;
  for (const auto& s : series) {
    for (double v : s) {
      vmax = std::max(vmax, v);
      vmin = std::min(vmin, v);
    }
    n = std::max(n, s.size());
  }
  if (vmax == vmin) vmax = vmin + 1.0;
  auto px_of = [&](std::size_t i) {
    return ml + static_cast<int>(static_cast<double>(i) / std::max<std::size_t>(1, n - 1) *
                                 (width_px - ml - mr));
  };
  auto py_of = [&](double v) {
    return mt + static_cast<int>((vmax - v) / (vmax - vmin) * (height_px - mt - mb));
  };
  img.line(ml, mt, ml, height_px - mb, 0, 0, 0);
  img.line(ml, height_px - mb, width_px - mr, height_px - mb, 0, 0, 0);

  const std::uint8_t palette[6][3] = {{31, 119, 180}, {214, 39, 40},  {44, 160, 44},
                                      {148, 103, 189}, {255, 127, 14}, {23, 190, 207}};
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::uint8_t* col = palette[si % 6];
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      img.line(px_of(i), py_of(s[i]), px_of(i + 1), py_of(s[i + 1]), col[0], col[1], col[2]);
    }
    // legend swatch
    int ly = mt + 12 * static_cast<int>(si);
    img.line(width_px - mr - 60, ly, width_px - mr - 40, ly, col[0], col[1], col[2]);
  }
  (void)labels;  // labels are written to the companion CSV; the plot keeps swatches only
  img.save_png(path);
}

}  // namespace thermesh
