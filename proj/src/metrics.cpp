#include "thermesh/metrics.hpp"

#include <chrono>
#include <cmath>
#include <functional>

#include <json.hpp>

namespace thermesh::metrics {

namespace {

void check_sample(const FieldSample& s) {
  if (s.truth->size() != s.pred->size() ||
      static_cast<std::size_t>(s.truth->size()) != s.mask->size()) {
    throw ValidationError("metrics: field sizes disagree");
  }
  bool any = false;
  for (std::uint8_t m : *s.mask) any = any || m != 0;
  if (!any) throw ValidationError("metrics: sample with empty mask");
}

}  // namespace

double mae(const std::vector<FieldSample>& samples) {
  if (samples.empty()) throw ValidationError("metrics: no samples");
  double acc = 0.0;
  for (const FieldSample& s : samples) {
    check_sample(s);
    double sum = 0.0, cnt = 0.0;
    for (Eigen::Index i = 0; i < s.truth->size(); ++i) {
      if ((*s.mask)[static_cast<std::size_t>(i)] == 0) continue;
      sum += std::abs((*s.truth)(i) - (*s.pred)(i));
      cnt += 1.0;
    }
    acc += sum / cnt;
  }
  return acc / static_cast<double>(samples.size());
}

double mape(const std::vector<FieldSample>& samples, double eps_c) {
  if (samples.empty()) throw ValidationError("metrics: no samples");
  double acc = 0.0;
  for (const FieldSample& s : samples) {
    check_sample(s);
    double sum = 0.0, cnt = 0.0;
    for (Eigen::Index i = 0; i < s.truth->size(); ++i) {
      if ((*s.mask)[static_cast<std::size_t>(i)] == 0) continue;
      sum += std::abs((*s.truth)(i) - (*s.pred)(i)) / (std::abs((*s.truth)(i)) + eps_c);
      cnt += 1.0;
    }
    acc += sum / cnt;
  }
  return 100.0 * acc / static_cast<double>(samples.size());
}

double mme(const std::vector<FieldSample>& samples) {
  if (samples.empty()) throw ValidationError("metrics: no samples");
  double acc = 0.0;
  for (const FieldSample& s : samples) {
    check_sample(s);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < s.truth->size(); ++i) {
      if ((*s.mask)[static_cast<std::size_t>(i)] == 0) continue;
      worst = std::max(worst, std::abs((*s.truth)(i) - (*s.pred)(i)));
    }
    acc += worst;
  }
  return acc / static_cast<double>(samples.size());
}

double mp_iou(const std::vector<FieldSample>& samples, double threshold_c,
              bool count_empty_as_perfect) {
  if (samples.empty()) throw ValidationError("metrics: no samples");
  if (!(threshold_c > 0)) throw ValidationError("metrics: melt threshold must be positive");
  double acc = 0.0;
  int counted = 0;
  for (const FieldSample& s : samples) {
    check_sample(s);
    int inter = 0, uni = 0;
    for (Eigen::Index i = 0; i < s.truth->size(); ++i) {
      if ((*s.mask)[static_cast<std::size_t>(i)] == 0) continue;
      bool a = (*s.truth)(i) > threshold_c;
      bool b = (*s.pred)(i) > threshold_c;
      inter += (a && b) ? 1 : 0;
      uni += (a || b) ? 1 : 0;
    }
    if (uni == 0) {
      if (count_empty_as_perfect) {
        acc += 1.0;
        ++counted;
      }
      continue;
    }
    acc += static_cast<double>(inter) / static_cast<double>(uni);
    ++counted;
  }
  if (counted == 0) return 1.0;
  return acc / static_cast<double>(counted);
}

double t_mae_at(const std::vector<std::vector<FieldSample>>& sequences, int t) {
  std::vector<FieldSample> alive;
  for (const auto& seq : sequences) {
    if (t < static_cast<int>(seq.size())) alive.push_back(seq[static_cast<std::size_t>(t)]);
  }
  if (alive.empty()) throw ValidationError("t_mae: no sample alive at step " + std::to_string(t));
  return mae(alive);
}

std::vector<double> t_mae(const std::vector<std::vector<FieldSample>>& sequences) {
  std::size_t longest = 0;
  for (const auto& seq : sequences) longest = std::max(longest, seq.size());
  std::vector<double> out;
  for (std::size_t t = 0; t < longest; ++t) out.push_back(t_mae_at(sequences, static_cast<int>(t)));
  return out;
}

Mat nodal_gradients(const LayeredMesh& mesh, const Vec& temps,
                    const std::vector<std::uint8_t>& mask) {
  Mat grads = Mat::Zero(mesh.num_nodes(), 2);
  Vec weight = Vec::Zero(mesh.num_nodes());
  for (int e = 0; e < mesh.num_elems(); ++e) {
    const auto& q = mesh.elems[static_cast<std::size_t>(e)];
    bool active = true;
    for (int k = 0; k < 4; ++k) active = active && mask[static_cast<std::size_t>(q[static_cast<std::size_t>(k)])] != 0;
    if (!active) continue;
    double xs[4], ys[4], ts[4];
    for (int k = 0; k < 4; ++k) {
      xs[k] = mesh.coords_mm[static_cast<std::size_t>(q[static_cast<std::size_t>(k)])].x();
      ys[k] = mesh.coords_mm[static_cast<std::size_t>(q[static_cast<std::size_t>(k)])].y();
      ts[k] = temps(q[static_cast<std::size_t>(k)]);
    }
    // bilinear shape derivatives at the element center (xi = eta = 0)
    const double dxi[4] = {-0.25, 0.25, 0.25, -0.25};
    const double deta[4] = {-0.25, -0.25, 0.25, 0.25};
    double j11 = 0, j12 = 0, j21 = 0, j22 = 0;
    for (int k = 0; k < 4; ++k) {
      j11 += dxi[k] * xs[k];
      j12 += dxi[k] * ys[k];
      j21 += deta[k] * xs[k];
      j22 += deta[k] * ys[k];
    }
    double det = j11 * j22 - j12 * j21;
    if (det == 0.0) throw ComputeError("nodal_gradients: degenerate element " + std::to_string(e));
    double gx = 0, gy = 0;
    for (int k = 0; k < 4; ++k) {
      double bx = (j22 * dxi[k] - j12 * deta[k]) / det;
      double by = (-j21 * dxi[k] + j11 * deta[k]) / det;
      gx += bx * ts[k];
      gy += by * ts[k];
    }
    double area = 4.0 * std::abs(det);  // integral of |J| over the reference square
    for (int k = 0; k < 4; ++k) {
      int node = q[static_cast<std::size_t>(k)];
      grads(node, 0) += area * gx;
      grads(node, 1) += area * gy;
      weight(node) += area;
    }
  }
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (weight(i) > 0) grads.row(i) /= weight(i);
  }
  return grads;
}

double grad_mae_xy(const LayeredMesh& mesh, const std::vector<FieldSample>& samples) {
  if (samples.empty()) throw ValidationError("metrics: no samples");
  double acc = 0.0;
  for (const FieldSample& s : samples) {
    check_sample(s);
    Mat gt = nodal_gradients(mesh, *s.truth, *s.mask);
    Mat gp = nodal_gradients(mesh, *s.pred, *s.mask);
    double sum = 0.0, cnt = 0.0;
    for (Eigen::Index i = 0; i < s.truth->size(); ++i) {
      if ((*s.mask)[static_cast<std::size_t>(i)] == 0) continue;
      sum += 0.5 * (std::abs(gt(i, 0) - gp(i, 0)) + std::abs(gt(i, 1) - gp(i, 1)));
      cnt += 1.0;
    }
    acc += sum / cnt;
  }
  return acc / static_cast<double>(samples.size());
}

double grad_mae_t(const std::vector<FieldSample>& seq, const std::vector<double>& times_s) {
  if (seq.size() < 2) throw ValidationError("grad_mae_t: need at least two steps");
  if (seq.size() != times_s.size()) throw ValidationError("grad_mae_t: time/step count mismatch");
  int n = static_cast<int>(seq.size());
  auto derivative = [&](auto field_at, int t, Eigen::Index i) {
    if (t == 0) {
      return (field_at(1, i) - field_at(0, i)) / (times_s[1] - times_s[0]);
    }
    if (t == n - 1) {
      return (field_at(n - 1, i) - field_at(n - 2, i)) /
             (times_s[static_cast<std::size_t>(n - 1)] - times_s[static_cast<std::size_t>(n - 2)]);
    }
    return (field_at(t + 1, i) - field_at(t - 1, i)) /
           (times_s[static_cast<std::size_t>(t + 1)] - times_s[static_cast<std::size_t>(t - 1)]);
  };
  auto truth_at = [&](int t, Eigen::Index i) { return (*seq[static_cast<std::size_t>(t)].truth)(i); };
  auto pred_at = [&](int t, Eigen::Index i) { return (*seq[static_cast<std::size_t>(t)].pred)(i); };

  double acc = 0.0;
  int counted = 0;
  for (int t = 0; t < n; ++t) {
    const FieldSample& s = seq[static_cast<std::size_t>(t)];
    check_sample(s);
    // derivative stencils must not straddle an activation change
    auto mask_ok = [&](int u) {
      return *seq[static_cast<std::size_t>(u)].mask == *s.mask;
    };
    if (t > 0 && t < n - 1 && (!mask_ok(t - 1) || !mask_ok(t + 1))) continue;
    if (t == 0 && !mask_ok(1)) continue;
    if (t == n - 1 && !mask_ok(n - 2)) continue;
    double sum = 0.0, cnt = 0.0;
    for (Eigen::Index i = 0; i < s.truth->size(); ++i) {
      if ((*s.mask)[static_cast<std::size_t>(i)] == 0) continue;
      sum += std::abs(derivative(truth_at, t, i) - derivative(pred_at, t, i));
      cnt += 1.0;
    }
    acc += sum / cnt;
    ++counted;
  }
  if (counted == 0) throw ValidationError("grad_mae_t: no step with a stable stencil");
  return acc / counted;
}

std::vector<double> domain_normalized_curve(double tmae0, const std::vector<double>& domain_size) {
  std::vector<double> out;
  for (double d : domain_size) {
    if (!(d > 0)) throw ValidationError("domain_normalized_curve: domain size must be positive");
    out.push_back(tmae0 / d);
  }
  return out;
}

InferenceTiming time_inference(const std::function<int()>& run_pass, int repeats) {
  if (repeats < 1) throw ValidationError("time_inference: repeats must be >= 1");
  run_pass();  // warm-up, untimed
  std::vector<double> per_step;
  for (int r = 0; r < repeats; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    int steps = run_pass();
    auto t1 = std::chrono::steady_clock::now();
    if (steps <= 0) throw ValidationError("time_inference: pass reported no predicted steps");
    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    per_step.push_back(ms / steps);
  }
  InferenceTiming t;
  t.repeats = repeats;
  for (double v : per_step) t.ms_per_step_mean += v;
  t.ms_per_step_mean /= repeats;
  for (double v : per_step) {
    t.ms_per_step_var += (v - t.ms_per_step_mean) * (v - t.ms_per_step_mean);
  }
  t.ms_per_step_var /= std::max(1, repeats - 1);
  return t;
}

std::string report_to_json(const MetricReport& r) {
  nlohmann::json j;
  j["mae_c"] = r.mae_c;
  j["mape_pct"] = r.mape_pct;
  j["mme_c"] = r.mme_c;
  if (r.mp_iou.has_value()) j["mp_iou"] = *r.mp_iou;
  j["grad_mae_xy_c_mm"] = r.grad_mae_xy_c_mm;
  j["grad_mae_t_c_s"] = r.grad_mae_t_c_s;
  j["t_mae_c"] = r.t_mae_c;
  j["domain_size"] = r.domain_size;
  j["parameter_count"] = r.parameter_count;
  j["inference_ms_per_step_mean"] = r.timing.ms_per_step_mean;
  j["inference_ms_per_step_var"] = r.timing.ms_per_step_var;
  j["inference_repeats"] = r.timing.repeats;
  return j.dump(2);
}

}  // namespace thermesh::metrics
