#include "thermesh/bundle.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace thermesh {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'T', 'H', 'B', 'N', 'D', 'L', '1', '\n'};
constexpr int kSchemaVersion = 1;

class SectionWriter {
public:
  void add(const std::string& name, const std::string& dtype, const void* data,
           std::size_t count, std::size_t elem_bytes) {
    json s;
    s["name"] = name;
    s["dtype"] = dtype;
    s["count"] = count;
    s["offset"] = payload_.size();
    sections_.push_back(s);
    const char* p = static_cast<const char*>(data);
    payload_.insert(payload_.end(), p, p + count * elem_bytes);
  }

  json sections_ = json::array();
  std::string payload_;
};

class SectionReader {
public:
  SectionReader(const json& manifest, std::string payload) : payload_(std::move(payload)) {
    for (const auto& s : manifest.at("arrays")) {
      index_[s.at("name").get<std::string>()] = s;
    }
  }

  template <typename T>
  std::vector<T> read(const std::string& name, const char* dtype) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ComputeError("bundle schema error: missing array " + name);
    const json& s = it->second;
    if (s.at("dtype").get<std::string>() != dtype) {
      throw ComputeError("bundle schema error: dtype mismatch for " + name);
    }
    std::size_t count = s.at("count").get<std::size_t>();
    std::size_t offset = s.at("offset").get<std::size_t>();
    if (offset + count * sizeof(T) > payload_.size()) {
      throw ComputeError("bundle schema error: array " + name + " overruns payload at offset " +
                         std::to_string(offset));
    }
    std::vector<T> out(count);
    std::memcpy(out.data(), payload_.data() + offset, count * sizeof(T));
    return out;
  }

private:
  std::map<std::string, json> index_;
  std::string payload_;
};

}  // namespace

std::vector<std::uint8_t> pack_bits(const std::vector<std::uint8_t>& bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  return out;
}

std::vector<std::uint8_t> unpack_bits(const std::vector<std::uint8_t>& bytes, std::size_t count) {
  if (bytes.size() < (count + 7) / 8) throw ComputeError("unpack_bits: byte buffer too small");
  std::vector<std::uint8_t> out(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  }
  return out;
}

void write_bundle(const SimulationBundle& b, const std::string& path) {
  b.validate();
  const int n = b.mesh.num_nodes();
  const int ne = b.mesh.num_elems();
  const int steps = b.num_steps();

  SectionWriter w;
  {
    std::vector<double> coords(static_cast<std::size_t>(n) * 2);
    for (int i = 0; i < n; ++i) {
      coords[2 * static_cast<std::size_t>(i)] = b.mesh.coords_mm[static_cast<std::size_t>(i)].x();
      coords[2 * static_cast<std::size_t>(i) + 1] = b.mesh.coords_mm[static_cast<std::size_t>(i)].y();
    }
    w.add("coords_mm", "f64", coords.data(), coords.size(), 8);
  }
  {
    std::vector<std::uint32_t> elems(static_cast<std::size_t>(ne) * 4);
    for (int e = 0; e < ne; ++e) {
      for (int k = 0; k < 4; ++k) {
        elems[4 * static_cast<std::size_t>(e) + static_cast<std::size_t>(k)] =
            static_cast<std::uint32_t>(b.mesh.elems[static_cast<std::size_t>(e)][static_cast<std::size_t>(k)]);
      }
    }
    w.add("elems", "u32", elems.data(), elems.size(), 4);
  }
  {
    std::vector<std::uint32_t> el(b.mesh.elem_layer.begin(), b.mesh.elem_layer.end());
    w.add("elem_layer", "u32", el.data(), el.size(), 4);
  }
  w.add("elem_is_metal", "u8", b.mesh.elem_is_metal.data(), b.mesh.elem_is_metal.size(), 1);
  w.add("node_is_metal", "u8", b.mesh.node_is_metal.data(), b.mesh.node_is_metal.size(), 1);
  w.add("node_on_boundary", "u8", b.mesh.node_on_boundary.data(), b.mesh.node_on_boundary.size(), 1);
  w.add("node_on_interface", "u8", b.mesh.node_on_interface.data(), b.mesh.node_on_interface.size(), 1);
  {
    std::vector<double> ext(static_cast<std::size_t>(b.mesh.num_layers) * 2);
    for (int l = 0; l < b.mesh.num_layers; ++l) {
      ext[2 * static_cast<std::size_t>(l)] = b.mesh.metal_extent_top_mm[static_cast<std::size_t>(l)].first;
      ext[2 * static_cast<std::size_t>(l) + 1] = b.mesh.metal_extent_top_mm[static_cast<std::size_t>(l)].second;
    }
    w.add("metal_extent_top_mm", "f64", ext.data(), ext.size(), 8);
  }
  {
    std::vector<double> gp = {b.params.base_width_mm, b.params.left_break_mm,
                              b.params.right_break_mm, b.params.angle_l1, b.params.angle_l2,
                              b.params.angle_r1, b.params.angle_r2};
    w.add("geom_params", "f64", gp.data(), gp.size(), 8);
  }
  w.add("times_s", "f64", b.times_s.data(), b.times_s.size(), 8);
  {
    std::vector<std::uint32_t> li(b.layer_index.begin(), b.layer_index.end());
    w.add("layer_index", "u32", li.data(), li.size(), 4);
  }
  w.add("heating", "u8", b.heating.data(), b.heating.size(), 1);
  {
    std::vector<float> lx(b.laser_x_mm.begin(), b.laser_x_mm.end());
    w.add("laser_x_mm", "f32", lx.data(), lx.size(), 4);
    std::vector<float> lp(b.laser_power_w.begin(), b.laser_power_w.end());
    w.add("laser_power_w", "f32", lp.data(), lp.size(), 4);
  }
  {
    std::vector<std::uint8_t> abits, mbits;
    for (int s = 0; s < steps; ++s) {
      auto pa = pack_bits(b.active[static_cast<std::size_t>(s)]);
      auto pm = pack_bits(b.material[static_cast<std::size_t>(s)]);
      abits.insert(abits.end(), pa.begin(), pa.end());
      mbits.insert(mbits.end(), pm.begin(), pm.end());
    }
    w.add("active_bits", "u8", abits.data(), abits.size(), 1);
    w.add("material_bits", "u8", mbits.data(), mbits.size(), 1);
  }
  {
    std::vector<float> temps(static_cast<std::size_t>(steps) * static_cast<std::size_t>(n));
    for (int s = 0; s < steps; ++s) {
      for (int i = 0; i < n; ++i) {
        temps[static_cast<std::size_t>(s) * n + static_cast<std::size_t>(i)] =
            static_cast<float>(b.temps_c[static_cast<std::size_t>(s)](i));
      }
    }
    w.add("temps_c", "f32", temps.data(), temps.size(), 4);
  }

  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["id"] = b.id;
  manifest["units"] = {{"length", "mm"}, {"time", "s"}, {"temperature", "degC"}, {"power", "W"}};
  manifest["counts"] = {{"nodes", n},
                        {"elems", ne},
                        {"steps", steps},
                        {"layers", b.mesh.num_layers},
                        {"grid_rows", b.mesh.grid_rows},
                        {"grid_cols", b.mesh.grid_cols},
                        {"powder_cols_left", b.mesh.powder_cols_left},
                        {"metal_cols", b.mesh.metal_cols},
                        {"rows_per_layer", b.mesh.rows_per_layer}};
  manifest["layer_thickness_mm"] = b.mesh.layer_thickness_mm;
  manifest["height_mm"] = b.height_mm;
  manifest["payload_bytes"] = w.payload_.size();
  manifest["arrays"] = w.sections_;
  std::string mtxt = manifest.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ComputeError("cannot open bundle for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  std::uint64_t mlen = mtxt.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  out.write(mtxt.data(), static_cast<std::streamsize>(mtxt.size()));
  out.write(w.payload_.data(), static_cast<std::streamsize>(w.payload_.size()));
  if (!out) throw ComputeError("short write on bundle: " + path);
}

SimulationBundle read_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ComputeError("cannot open bundle: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ComputeError("bundle schema error: bad magic in " + path);
  }
  std::uint64_t mlen = 0;
  in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  std::string mtxt(mlen, '\0');
  in.read(mtxt.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw ComputeError("bundle schema error: truncated manifest in " + path);
  json manifest = json::parse(mtxt, nullptr, false);
  if (manifest.is_discarded()) throw ComputeError("bundle schema error: invalid manifest JSON");
  if (manifest.at("schema_version").get<int>() != kSchemaVersion) {
    throw ComputeError("bundle schema error: unsupported schema version");
  }
  std::string payload(manifest.at("payload_bytes").get<std::size_t>(), '\0');
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!in) throw ComputeError("bundle schema error: truncated payload in " + path);
  SectionReader r(manifest, std::move(payload));

  SimulationBundle b;
  b.id = manifest.at("id").get<std::string>();
  b.height_mm = manifest.at("height_mm").get<double>();
  const auto& counts = manifest.at("counts");
  int n = counts.at("nodes").get<int>();
  int ne = counts.at("elems").get<int>();
  int steps = counts.at("steps").get<int>();
  b.mesh.num_layers = counts.at("layers").get<int>();
  b.mesh.grid_rows = counts.at("grid_rows").get<int>();
  b.mesh.grid_cols = counts.at("grid_cols").get<int>();
  b.mesh.powder_cols_left = counts.at("powder_cols_left").get<int>();
  b.mesh.metal_cols = counts.at("metal_cols").get<int>();
  b.mesh.rows_per_layer = counts.at("rows_per_layer").get<int>();
  b.mesh.layer_thickness_mm = manifest.at("layer_thickness_mm").get<double>();

  auto coords = r.read<double>("coords_mm", "f64");
  if (static_cast<int>(coords.size()) != 2 * n) throw ComputeError("bundle schema error: coords count");
  b.mesh.coords_mm.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    b.mesh.coords_mm[static_cast<std::size_t>(i)] = {coords[2 * static_cast<std::size_t>(i)],
                                                     coords[2 * static_cast<std::size_t>(i) + 1]};
  }
  auto elems = r.read<std::uint32_t>("elems", "u32");
  b.mesh.elems.resize(static_cast<std::size_t>(ne));
  for (int e = 0; e < ne; ++e) {
    for (int k = 0; k < 4; ++k) {
      b.mesh.elems[static_cast<std::size_t>(e)][static_cast<std::size_t>(k)] =
          static_cast<int>(elems[4 * static_cast<std::size_t>(e) + static_cast<std::size_t>(k)]);
    }
  }
  auto el = r.read<std::uint32_t>("elem_layer", "u32");
  b.mesh.elem_layer.assign(el.begin(), el.end());
  b.mesh.elem_is_metal = r.read<std::uint8_t>("elem_is_metal", "u8");
  b.mesh.node_is_metal = r.read<std::uint8_t>("node_is_metal", "u8");
  b.mesh.node_on_boundary = r.read<std::uint8_t>("node_on_boundary", "u8");
  b.mesh.node_on_interface = r.read<std::uint8_t>("node_on_interface", "u8");
  auto ext = r.read<double>("metal_extent_top_mm", "f64");
  for (int l = 0; l < b.mesh.num_layers; ++l) {
    b.mesh.metal_extent_top_mm.emplace_back(ext[2 * static_cast<std::size_t>(l)],
                                            ext[2 * static_cast<std::size_t>(l) + 1]);
  }
  auto gp = r.read<double>("geom_params", "f64");
  b.params = {gp[0], gp[1], gp[2], gp[3], gp[4], gp[5], gp[6]};

  b.times_s = r.read<double>("times_s", "f64");
  auto li = r.read<std::uint32_t>("layer_index", "u32");
  b.layer_index.assign(li.begin(), li.end());
  b.heating = r.read<std::uint8_t>("heating", "u8");
  auto lx = r.read<float>("laser_x_mm", "f32");
  b.laser_x_mm.assign(lx.begin(), lx.end());
  auto lp = r.read<float>("laser_power_w", "f32");
  b.laser_power_w.assign(lp.begin(), lp.end());

  std::size_t stride = (static_cast<std::size_t>(n) + 7) / 8;
  auto abits = r.read<std::uint8_t>("active_bits", "u8");
  auto mbits = r.read<std::uint8_t>("material_bits", "u8");
  if (abits.size() != stride * static_cast<std::size_t>(steps) || mbits.size() != abits.size()) {
    throw ComputeError("bundle schema error: mask bit counts");
  }
  auto temps = r.read<float>("temps_c", "f32");
  if (temps.size() != static_cast<std::size_t>(steps) * static_cast<std::size_t>(n)) {
    throw ComputeError("bundle schema error: temperature count");
  }
  for (int s = 0; s < steps; ++s) {
    std::vector<std::uint8_t> arow(abits.begin() + static_cast<std::ptrdiff_t>(s * stride),
                                   abits.begin() + static_cast<std::ptrdiff_t>((s + 1) * stride));
    std::vector<std::uint8_t> mrow(mbits.begin() + static_cast<std::ptrdiff_t>(s * stride),
                                   mbits.begin() + static_cast<std::ptrdiff_t>((s + 1) * stride));
    b.active.push_back(unpack_bits(arow, static_cast<std::size_t>(n)));
    b.material.push_back(unpack_bits(mrow, static_cast<std::size_t>(n)));
    Vec t(n);
    for (int i = 0; i < n; ++i) {
      t(i) = static_cast<double>(temps[static_cast<std::size_t>(s) * n + static_cast<std::size_t>(i)]);
    }
    b.temps_c.push_back(std::move(t));
  }
  b.validate();
  return b;
}

}  // namespace thermesh
