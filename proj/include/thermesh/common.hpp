#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermesh {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Raised when user-supplied parameters or files violate a contract.
/// Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a computation fails at runtime (solver divergence, corrupt
/// archive, ...). Maps to CLI exit code 2.
class ComputeError : public std::runtime_error {
public:
  explicit ComputeError(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic stream of pseudo-random numbers. Every stochastic component
/// takes one of these explicitly; there is no hidden global state.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : engine_(seed), base_(seed) {}

  /// Derives an independent child stream, e.g. one per simulation id, so that
  /// parallel work is schedule-independent.
  RngStream fork(std::uint64_t salt) const { return RngStream(seed_mix(base_, salt)); }

  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(engine_);
  }

  double normal() {
    std::normal_distribution<double> d(0.0, 1.0);
    return d(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(engine_() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  static std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined word
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  std::uint64_t base_ = 0;
};

constexpr double kPi = 3.14159265358979323846;

/// Fixed temperature normalization bounds in degC. The data spans 20 degC
/// ambient up to roughly 2100 degC near the beam; fixed bounds keep the
/// normalization time-invariant.
constexpr double kTempMinC = 20.0;
constexpr double kTempMaxC = 2100.0;

inline double normalize_temp(double t_c) {
  return (t_c - kTempMinC) / (kTempMaxC - kTempMinC);
}
inline double denormalize_temp(double t_n) {
  return t_n * (kTempMaxC - kTempMinC) + kTempMinC;
}

}  // namespace thermesh
