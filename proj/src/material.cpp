#include "thermesh/material.hpp"

#include <algorithm>
#include <cmath>

namespace thermesh {

PiecewiseLinear::PiecewiseLinear(std::vector<double> temps_c, std::vector<double> values)
    : temps_(std::move(temps_c)), values_(std::move(values)) {
  if (temps_.empty() || temps_.size() != values_.size()) {
    throw ValidationError("property table: breakpoint/value counts must match and be non-empty");
  }
  for (std::size_t i = 1; i < temps_.size(); ++i) {
    if (temps_[i] <= temps_[i - 1]) {
      throw ValidationError("property table: breakpoints must be strictly increasing");
    }
  }
  cumint_.assign(temps_.size(), 0.0);
  for (std::size_t i = 1; i < temps_.size(); ++i) {
    double dt = temps_[i] - temps_[i - 1];
    cumint_[i] = cumint_[i - 1] + 0.5 * (values_[i] + values_[i - 1]) * dt;
  }
}

double PiecewiseLinear::operator()(double t_c) const {
  if (t_c <= temps_.front()) return values_.front();
  if (t_c >= temps_.back()) return values_.back();
  auto it = std::upper_bound(temps_.begin(), temps_.end(), t_c);
  std::size_t i = static_cast<std::size_t>(it - temps_.begin());
  double a = (t_c - temps_[i - 1]) / (temps_[i] - temps_[i - 1]);
  return values_[i - 1] + a * (values_[i] - values_[i - 1]);
}

double PiecewiseLinear::slope(double t_c) const {
  if (t_c < temps_.front() || t_c >= temps_.back()) return 0.0;
  auto it = std::upper_bound(temps_.begin(), temps_.end(), t_c);
  std::size_t i = static_cast<std::size_t>(it - temps_.begin());
  return (values_[i] - values_[i - 1]) / (temps_[i] - temps_[i - 1]);
}

double PiecewiseLinear::integral_from_start(double t_c) const {
  if (t_c <= temps_.front()) return (t_c - temps_.front()) * values_.front();
  if (t_c >= temps_.back()) return cumint_.back() + (t_c - temps_.back()) * values_.back();
  auto it = std::upper_bound(temps_.begin(), temps_.end(), t_c);
  std::size_t i = static_cast<std::size_t>(it - temps_.begin());
  double dt = t_c - temps_[i - 1];
  double v = (*this)(t_c);
  return cumint_[i - 1] + 0.5 * (values_[i - 1] + v) * dt;
}

double MaterialTables::apparent_capacity(double t_old_c, double t_new_c) const {
  double dt = t_new_c - t_old_c;
  if (std::abs(dt) < 1e-9) {
    return cp_j_kgk(t_new_c) + latent_heat.slope(t_new_c);
  }
  return (enthalpy(t_new_c) - enthalpy(t_old_c)) / dt;
}

void MaterialTables::validate() const {
  if (density_kg_m3 <= 0) throw ValidationError("material: density must be positive");
  for (double v : cp_j_kgk.values()) {
    if (v <= 0) throw ValidationError("material: Cp must be positive everywhere");
  }
  for (double v : lambda_metal.values()) {
    if (v <= 0) throw ValidationError("material: lambda_metal must be positive everywhere");
  }
  for (double v : lambda_powder.values()) {
    if (v <= 0) throw ValidationError("material: lambda_powder must be positive everywhere");
  }
  const auto& lf = latent_heat.values();
  for (std::size_t i = 1; i < lf.size(); ++i) {
    if (lf[i] < lf[i - 1]) {
      throw ValidationError("material: cumulative latent heat must be non-decreasing");
    }
  }
}

MaterialTables default_material_tables() {
  MaterialTables t;
  t.density_kg_m3 = 8190.0;
  t.cp_j_kgk = PiecewiseLinear({20.0, 1200.0}, {435.0, 700.0});
  t.lambda_metal = PiecewiseLinear({20.0, 1200.0}, {11.0, 28.0});
  // powder conducts ~10x worse than solid below the melt band and matches it
  // once molten
  double lam_melt = 11.0 + (28.0 - 11.0) * (1170.0 - 20.0) / (1200.0 - 20.0);
  t.lambda_powder = PiecewiseLinear({20.0, 1170.0, 1230.0}, {1.1, 0.1 * lam_melt, 28.0});
  t.latent_heat = PiecewiseLinear({1170.0, 1230.0}, {0.0, 2.1e5});
  t.validate();
  return t;
}

}  // namespace thermesh
