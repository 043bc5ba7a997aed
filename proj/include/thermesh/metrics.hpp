#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "thermesh/mesh.hpp"

namespace thermesh::metrics {

/// One evaluated field sample: true/pred temperatures over the mesh nodes and
/// the active-node mask.
struct FieldSample {
  const Vec* truth;
  const Vec* pred;
  const std::vector<std::uint8_t>* mask;
};

inline constexpr double kMeltThresholdC = 1170.0;  // melting temperature
inline constexpr double kMapeEpsilonC = 1.0;

/// Masked mean absolute error averaged over samples.
double mae(const std::vector<FieldSample>& samples);
/// Masked mean absolute percentage error (percent); eps guards near-zero
/// temperatures in the denominator.
double mape(const std::vector<FieldSample>& samples, double eps_c = kMapeEpsilonC);
/// Mean (over samples) of the maximum masked absolute error.
double mme(const std::vector<FieldSample>& samples);

/// Intersection-over-union of super-threshold node sets, averaged over
/// samples. When both sets are empty the sample scores 1 ("no melt pool"
/// agreement); with count_empty_as_perfect=false such samples are skipped.
double mp_iou(const std::vector<FieldSample>& samples, double threshold_c = kMeltThresholdC,
              bool count_empty_as_perfect = true);

/// Time-resolved MAE: per time index, the masked MAE averaged over the
/// samples still alive at that index. sequences[sample][t].
double t_mae_at(const std::vector<std::vector<FieldSample>>& sequences, int t);
std::vector<double> t_mae(const std::vector<std::vector<FieldSample>>& sequences);

/// Per-node spatial gradient (dT/dx, dT/dy in degC/mm): bilinear element
/// gradients at element centers, area-weighted projection onto nodes.
/// Elements with any node outside the mask are skipped.
Mat nodal_gradients(const LayeredMesh& mesh, const Vec& temps,
                    const std::vector<std::uint8_t>& mask);

/// Masked MAE of spatial gradients: mean over x/y components per the metric
/// definition.
double grad_mae_xy(const LayeredMesh& mesh, const std::vector<FieldSample>& samples);

/// Masked MAE of temporal derivatives over a sequence (central differences in
/// the interior, one-sided at the ends). times_s gives the step times.
double grad_mae_t(const std::vector<FieldSample>& seq_true_pred, const std::vector<double>& times_s);

/// Reference decay curve f(t) = tmae0 / domain_size(t).
std::vector<double> domain_normalized_curve(double tmae0, const std::vector<double>& domain_size);

/// Inference timing protocol: one untimed warm-up, then >= 3 timed passes;
/// reports per-step mean and variance across repeats.
struct InferenceTiming {
  double ms_per_step_mean = 0.0;
  double ms_per_step_var = 0.0;
  int repeats = 0;
};
InferenceTiming time_inference(const std::function<int()>& run_pass, int repeats = 3);

/// Aggregated report for one model.
struct MetricReport {
  double mae_c = 0.0;
  double mape_pct = 0.0;
  double mme_c = 0.0;
  std::optional<double> mp_iou;
  double grad_mae_xy_c_mm = 0.0;
  double grad_mae_t_c_s = 0.0;
  std::vector<double> t_mae_c;
  std::vector<double> domain_size;
  std::int64_t parameter_count = 0;
  InferenceTiming timing;
};

std::string report_to_json(const MetricReport& report);

}  // namespace thermesh::metrics
