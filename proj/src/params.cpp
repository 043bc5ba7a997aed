#include "thermesh/params.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace thermesh::ad {

using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'T', 'H', 'C', 'K', 'P', 'T', '1', '\n'};
}

Parameter& ParamRegistry::create(const std::string& name, int rows, int cols) {
  if (params_.count(name) != 0) {
    throw ValidationError("parameter already registered: " + name);
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Mat::Zero(rows, cols);
  p->grad = Mat::Zero(rows, cols);
  Parameter& ref = *p;
  params_.emplace(name, std::move(p));
  return ref;
}

Parameter& ParamRegistry::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValidationError("unknown parameter: " + name);
  return *it->second;
}

const Parameter& ParamRegistry::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValidationError("unknown parameter: " + name);
  return *it->second;
}

bool ParamRegistry::has(const std::string& name) const { return params_.count(name) != 0; }

void ParamRegistry::zero_grad() {
  for (auto& [_, p] : params_) p->grad.setZero();
}

void ParamRegistry::set_trainable(const std::string& prefix, bool trainable) {
  for (auto& [name, p] : params_) {
    if (name.rfind(prefix, 0) == 0) p->trainable = trainable;
  }
}

std::vector<Parameter*> ParamRegistry::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamRegistry::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

std::int64_t ParamRegistry::scalar_count(const std::string& prefix) const {
  std::int64_t n = 0;
  for (const auto& [name, p] : params_) {
    if (name.rfind(prefix, 0) == 0) n += p->value.size();
  }
  return n;
}

void ParamRegistry::save(const std::string& path) const {
  json manifest;
  manifest["format"] = 1;
  json tensors = json::array();
  std::int64_t offset = 0;
  for (const auto& [name, p] : params_) {
    json t;
    t["name"] = name;
    t["rows"] = p->value.rows();
    t["cols"] = p->value.cols();
    t["offset"] = offset;
    offset += p->value.size();
    tensors.push_back(t);
  }
  manifest["tensors"] = tensors;
  std::string mtxt = manifest.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ComputeError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  std::uint64_t mlen = mtxt.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  out.write(mtxt.data(), static_cast<std::streamsize>(mtxt.size()));
  for (const auto& [name, p] : params_) {
    const Mat& v = p->value;
    std::vector<float> buf(static_cast<std::size_t>(v.size()));
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      for (Eigen::Index c = 0; c < v.cols(); ++c) buf[k++] = static_cast<float>(v(r, c));
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw ComputeError("short write on checkpoint: " + path);
}

void ParamRegistry::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ComputeError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ComputeError("bad checkpoint magic in " + path);
  }
  std::uint64_t mlen = 0;
  in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  std::string mtxt(mlen, '\0');
  in.read(mtxt.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw ComputeError("truncated checkpoint manifest in " + path);
  json manifest = json::parse(mtxt);
  for (const auto& t : manifest.at("tensors")) {
    std::string name = t.at("name").get<std::string>();
    int rows = t.at("rows").get<int>();
    int cols = t.at("cols").get<int>();
    std::vector<float> buf(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw ComputeError("truncated checkpoint payload in " + path);
    Parameter& p = has(name) ? get(name) : create(name, rows, cols);
    if (p.value.rows() != rows || p.value.cols() != cols) {
      throw ValidationError("checkpoint shape mismatch for " + name);
    }
    std::size_t k = 0;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) p.value(r, c) = static_cast<double>(buf[k++]);
    }
    p.grad.setZero();
  }
}

void init_uniform_fanin(Parameter& p, RngStream& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, p.value.rows())));
  for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
      p.value(r, c) = rng.uniform(-bound, bound);
    }
  }
}

}  // namespace thermesh::ad
