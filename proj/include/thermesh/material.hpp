#pragma once

#include <utility>
#include <vector>

#include "thermesh/common.hpp"

namespace thermesh {

/// Piecewise-linear property table over temperature, clamped to the end
/// values outside the breakpoint range.
class PiecewiseLinear {
public:
  PiecewiseLinear() = default;
  PiecewiseLinear(std::vector<double> temps_c, std::vector<double> values);

  double operator()(double t_c) const;
  /// Slope at t_c (0 outside the breakpoint range; right-slope at knots).
  double slope(double t_c) const;
  /// Integral of the table from the first breakpoint up to t_c (clamped
  /// extension outside the range). Exact for the piecewise-linear form.
  double integral_from_start(double t_c) const;

  const std::vector<double>& temps() const { return temps_; }
  const std::vector<double>& values() const { return values_; }

private:
  std::vector<double> temps_;
  std::vector<double> values_;
  std::vector<double> cumint_;  // integral at each breakpoint
};

/// Temperature-dependent thermal properties of the metal and powder phases.
/// latent_heat is the cumulative latent release L_f(T) in J/kg
/// (non-decreasing); the solver differentiates it into an apparent capacity.
struct MaterialTables {
  double density_kg_m3 = 8190.0;
  PiecewiseLinear cp_j_kgk;        // specific heat
  PiecewiseLinear lambda_metal;    // W/(m K)
  PiecewiseLinear lambda_powder;   // W/(m K)
  PiecewiseLinear latent_heat;     // cumulative J/kg vs temperature

  /// Sensible + latent specific enthalpy in J/kg measured from the first Cp
  /// breakpoint.
  double enthalpy(double t_c) const {
    return cp_j_kgk.integral_from_start(t_c) + latent_heat(t_c);
  }
  /// Effective capacity between two states: the enthalpy chord when they
  /// differ, Cp + dL_f/dT in the limit. Keeps the discrete energy budget
  /// exact through the phase change.
  double apparent_capacity(double t_old_c, double t_new_c) const;

  void validate() const;
};

/// Configurable Inconel-718-like defaults; stand-in values, injectable via
/// config.
MaterialTables default_material_tables();

}  // namespace thermesh
