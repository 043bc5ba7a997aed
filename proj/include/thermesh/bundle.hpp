#pragma once

#include <string>
#include <vector>

#include "thermesh/geometry.hpp"
#include "thermesh/mesh.hpp"
#include "thermesh/process.hpp"

namespace thermesh {

/// One complete simulation: mesh, per-step masks, process trace and
/// temperature sequence. The unit of dataset I/O.
struct SimulationBundle {
  std::string id;
  GeometryParams params;
  double height_mm = 0.0;
  LayeredMesh mesh;

  // one entry per recorded step (record 0 is the initial state)
  std::vector<double> times_s;
  std::vector<int> layer_index;
  std::vector<std::uint8_t> heating;   // S(t)
  std::vector<double> laser_x_mm;
  std::vector<double> laser_power_w;   // P * S(t)
  std::vector<std::vector<std::uint8_t>> active;    // [steps][nodes]
  std::vector<std::vector<std::uint8_t>> material;  // [steps][nodes]
  std::vector<Vec> temps_c;                         // inactive nodes carry 0

  int num_steps() const { return static_cast<int>(times_s.size()); }
  int num_layers() const { return mesh.num_layers; }
  void validate() const;
};

/// Self-describing on-disk archive: versioned manifest plus raw little-endian
/// arrays (float64 coordinates, uint32 elements, bit-packed masks, float32
/// temperatures and process trace, float64 step times).
void write_bundle(const SimulationBundle& bundle, const std::string& path);
SimulationBundle read_bundle(const std::string& path);

std::vector<std::uint8_t> pack_bits(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> unpack_bits(const std::vector<std::uint8_t>& bytes, std::size_t count);

}  // namespace thermesh
