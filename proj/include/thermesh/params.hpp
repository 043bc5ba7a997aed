#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "thermesh/common.hpp"

namespace thermesh::ad {

/// A named trainable tensor plus its gradient accumulator.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
  bool trainable = true;
};

/// Flat registry of named parameters shared by all network modules.
/// Iteration order is name-sorted, so optimizer updates and checkpoints are
/// deterministic.
class ParamRegistry {
public:
  Parameter& create(const std::string& name, int rows, int cols);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool has(const std::string& name) const;

  void zero_grad();
  /// Freezes (or thaws) every parameter whose name starts with prefix.
  void set_trainable(const std::string& prefix, bool trainable);

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::int64_t scalar_count(const std::string& prefix = "") const;

  /// Named-tensor archive: manifest (name/shape/offset) + little-endian
  /// float32 payload.
  void save(const std::string& path) const;
  void load(const std::string& path);

private:
  std::map<std::string, std::unique_ptr<Parameter>> params_;
};

/// Scaled-uniform fan-in initialization for an [in x out] weight matrix.
void init_uniform_fanin(Parameter& p, RngStream& rng);

}  // namespace thermesh::ad
