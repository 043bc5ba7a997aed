#pragma once

#include <vector>

#include "thermesh/geometry.hpp"

namespace thermesh {

struct ProcessConfig {
  double laser_power_w = 175.0;
  double beam_radius_mm = 2.0;
  double scan_speed_mm_s = 5.0;
  double cooling_time_s = 10.0;
  double convection_w_m2k = 10.0;
  double ambient_c = 20.0;
  double dt_s = 0.1;

  void validate() const;
};

/// One simulation step of the deposition schedule. Times are end-of-step.
struct ScanStep {
  double time_s = 0.0;
  int layer = 0;
  bool heating = false;  // switching function S(t)
  double laser_x_mm = 0.0;
};

/// Layer-by-layer schedule: each layer is scanned across its top metal extent
/// at constant speed (alternating direction between successive layers), then
/// cools for the recoating time.
struct ProcessSchedule {
  std::vector<ScanStep> steps;
  std::vector<int> layer_first_step;  // index of each layer's first step

  int num_steps() const { return static_cast<int>(steps.size()); }
  /// Step index whose (t_prev, t] interval contains t_s.
  int step_at_time(double t_s) const;
};

ProcessSchedule build_schedule(const PartGeometry& geom, const ProcessConfig& cfg);

/// Gaussian surface flux in W/m^2 at horizontal position x (mm) for a beam
/// centered at laser_x (mm). Zero while the laser is off.
double laser_flux_w_m2(double x_mm, double laser_x_mm, bool heating, const ProcessConfig& cfg);

/// Flux at absolute schedule time t_s.
double laser_flux_at_time(double x_mm, double t_s, const ProcessConfig& cfg,
                          const ProcessSchedule& schedule);

}  // namespace thermesh
