#include "thermesh/process.hpp"

#include <algorithm>
#include <cmath>

namespace thermesh {

void ProcessConfig::validate() const {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0)) throw ValidationError(std::string("process: ") + field + " must be positive");
  };
  positive(laser_power_w, "laser_power_w");
  positive(beam_radius_mm, "beam_radius_mm");
  positive(scan_speed_mm_s, "scan_speed_mm_s");
  positive(convection_w_m2k, "convection_w_m2k");
  positive(dt_s, "dt_s");
  if (cooling_time_s < 0.0) throw ValidationError("process: cooling_time_s must be >= 0");
}

int ProcessSchedule::step_at_time(double t_s) const {
  for (int k = 0; k < num_steps(); ++k) {
    if (t_s <= steps[static_cast<std::size_t>(k)].time_s + 1e-12) return k;
  }
  throw ValidationError("schedule: time " + std::to_string(t_s) + " beyond the process end");
}

ProcessSchedule build_schedule(const PartGeometry& geom, const ProcessConfig& cfg) {
  cfg.validate();
  ProcessSchedule s;
  double t = 0.0;
  for (int l = 0; l < geom.layers; ++l) {
    s.layer_first_step.push_back(s.num_steps());
    auto [x0, x1] = geom.extent_top[static_cast<std::size_t>(l)];
    double width = x1 - x0;
    bool forward = (l % 2 == 0);  // alternates between successive layers
    double start = forward ? x0 : x1;
    double dir = forward ? 1.0 : -1.0;
    int n_heat = std::max(1, static_cast<int>(std::ceil(width / (cfg.scan_speed_mm_s * cfg.dt_s) - 1e-9)));
    for (int k = 1; k <= n_heat; ++k) {
      t += cfg.dt_s;
      double traveled = std::min(width, cfg.scan_speed_mm_s * cfg.dt_s * k);
      s.steps.push_back({t, l, true, start + dir * traveled});
    }
    int n_cool = static_cast<int>(std::llround(cfg.cooling_time_s / cfg.dt_s));
    for (int k = 0; k < n_cool; ++k) {
      t += cfg.dt_s;
      s.steps.push_back({t, l, false, start + dir * width});
    }
  }
  return s;
}

double laser_flux_w_m2(double x_mm, double laser_x_mm, bool heating, const ProcessConfig& cfg) {
  if (!heating) return 0.0;
  double r_m = cfg.beam_radius_mm * 1e-3;
  double d = (x_mm - laser_x_mm) / cfg.beam_radius_mm;  // dimensionless offset
  return 3.0 * cfg.laser_power_w / (kPi * r_m * r_m) * std::exp(-d * d);
}

double laser_flux_at_time(double x_mm, double t_s, const ProcessConfig& cfg,
                          const ProcessSchedule& schedule) {
  const ScanStep& st = schedule.steps[static_cast<std::size_t>(schedule.step_at_time(t_s))];
  return laser_flux_w_m2(x_mm, st.laser_x_mm, st.heating, cfg);
}

}  // namespace thermesh
