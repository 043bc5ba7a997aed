#include "thermesh/multiscale.hpp"

#include <future>

#include "thermesh/trainer.hpp"

namespace thermesh::nn {

LayerPartition partition_layers(const SimulationBundle& b) {
  if (b.num_steps() == 0 || b.layer_index.empty()) {
    throw ValidationError("partition_layers: bundle carries no step schedule");
  }
  LayerPartition part;
  for (int l = 0; l < b.num_layers(); ++l) {
    LayerSeq seq;
    seq.layer = l;
    part.layers.push_back(seq);
  }
  for (int s = 1; s < b.num_steps(); ++s) {
    int l = b.layer_index[static_cast<std::size_t>(s)];
    part.layers[static_cast<std::size_t>(l)].target_steps.push_back(s);
  }
  for (int l = 0; l < b.num_layers(); ++l) {
    LayerSeq& seq = part.layers[static_cast<std::size_t>(l)];
    if (seq.target_steps.empty()) {
      throw ValidationError("partition_layers: layer " + std::to_string(l) + " has no records");
    }
    seq.start_step = l == 0 ? 0 : part.layers[static_cast<std::size_t>(l) - 1].terminal_step();
    auto [x0, x1] = b.mesh.metal_extent_top_mm[static_cast<std::size_t>(l)];
    seq.width_mm = x1 - x0;
    double heat_s = 0.0, cool_s = 0.0;
    double t_prev = b.times_s[static_cast<std::size_t>(seq.start_step)];
    for (int s : seq.target_steps) {
      double dt = b.times_s[static_cast<std::size_t>(s)] - t_prev;
      t_prev = b.times_s[static_cast<std::size_t>(s)];
      if (b.heating[static_cast<std::size_t>(s)]) {
        heat_s += dt;
      } else {
        cool_s += dt;
      }
    }
    seq.print_duration_s = heat_s;
    seq.cooling_duration_s = cool_s;
  }
  return part;
}

Eigen::RowVectorXd DescriptorNorm::normalize(const LayerSeq& seq) const {
  auto scale = [](double v, double lo, double hi) {
    return hi > lo ? (v - lo) / (hi - lo) : 0.0;
  };
  Eigen::RowVectorXd g(3);
  g << scale(seq.width_mm, width_lo, width_hi), scale(seq.print_duration_s, print_lo, print_hi),
      scale(seq.cooling_duration_s, cool_lo, cool_hi);
  return g;
}

DescriptorNorm DescriptorNorm::fit(const std::vector<LayerPartition>& parts) {
  DescriptorNorm n;
  bool first = true;
  for (const LayerPartition& p : parts) {
    for (const LayerSeq& s : p.layers) {
      if (first) {
        n.width_lo = n.width_hi = s.width_mm;
        n.print_lo = n.print_hi = s.print_duration_s;
        n.cool_lo = n.cool_hi = s.cooling_duration_s;
        first = false;
      }
      n.width_lo = std::min(n.width_lo, s.width_mm);
      n.width_hi = std::max(n.width_hi, s.width_mm);
      n.print_lo = std::min(n.print_lo, s.print_duration_s);
      n.print_hi = std::max(n.print_hi, s.print_duration_s);
      n.cool_lo = std::min(n.cool_lo, s.cooling_duration_s);
      n.cool_hi = std::max(n.cool_hi, s.cooling_duration_s);
    }
  }
  if (first) throw ValidationError("DescriptorNorm: no layers to fit");
  return n;
}

Mat DescriptorNorm::to_mat() const {
  Mat m(1, 6);
  m << width_lo, width_hi, print_lo, print_hi, cool_lo, cool_hi;
  return m;
}

DescriptorNorm DescriptorNorm::from_mat(const Mat& m) {
  if (m.rows() != 1 || m.cols() != 6) throw ValidationError("DescriptorNorm: bad tensor shape");
  DescriptorNorm n;
  n.width_lo = m(0, 0);
  n.width_hi = m(0, 1);
  n.print_lo = m(0, 2);
  n.print_hi = m(0, 3);
  n.cool_lo = m(0, 4);
  n.cool_hi = m(0, 5);
  return n;
}

Mat intralayer_globals(const SimulationBundle& b, const LayerSeq& seq,
                       const std::vector<int>& record_steps, double dx_scale_mm,
                       double power_scale_w) {
  Mat g(static_cast<Eigen::Index>(record_steps.size()), 4);
  int prev = seq.start_step;
  for (std::size_t k = 0; k < record_steps.size(); ++k) {
    int s = record_steps[k];
    std::size_t su = static_cast<std::size_t>(s);
    std::size_t pu = static_cast<std::size_t>(prev);
    g(static_cast<Eigen::Index>(k), 0) = (b.laser_x_mm[su] - b.laser_x_mm[pu]) / dx_scale_mm;
    g(static_cast<Eigen::Index>(k), 1) = (b.laser_power_w[su] - b.laser_power_w[pu]) / power_scale_w;
    g(static_cast<Eigen::Index>(k), 2) = b.heating[su];
    g(static_cast<Eigen::Index>(k), 3) =
        static_cast<double>(k + 1) / static_cast<double>(record_steps.size());
    prev = s;
  }
  return g;
}

Mat mask_channels(const SimulationBundle& b, int step) {
  std::size_t s = static_cast<std::size_t>(step);
  Mat m(b.mesh.num_nodes(), 2);
  for (int i = 0; i < b.mesh.num_nodes(); ++i) {
    m(i, 0) = b.active[s][static_cast<std::size_t>(i)];
    m(i, 1) = b.material[s][static_cast<std::size_t>(i)];
  }
  return m;
}

Mat hidden_from_field(const MultiscaleModels& m, const MeshHierarchy& hier, const Vec& temps_c,
                      const Vec& active, const Vec& material, int hidden) {
  Tape t;
  HierarchyRef hr = HierarchyRef::of(hier);
  Var x0 = t.constant(Vgae::encoder_input(temps_c, active, material));
  LatentVars lv = m.vgae->encode(t, hr, x0);
  Mat mean = t.value(lv.mean);
  Mat h = Mat::Zero(mean.rows(), hidden);
  h.leftCols(mean.cols()) = mean;
  return h;
}

std::vector<Vec> interlayer_rollout(const MultiscaleModels& m, const SimulationBundle& b,
                                    const MeshHierarchy& hier, const LayerPartition& part) {
  const int L = static_cast<int>(part.layers.size());
  std::vector<Mat> mask_inputs;
  std::vector<int> mask_of_step;
  Mat globals(L, 3);
  for (int l = 0; l < L; ++l) {
    const LayerSeq& seq = part.layers[static_cast<std::size_t>(l)];
    mask_inputs.push_back(mask_channels(b, seq.terminal_step()));
    mask_of_step.push_back(l);
    globals.row(l) = m.norm.normalize(seq);
  }
  // hidden initialized from the encoded initial field
  Vec t0 = b.temps_c[0];
  MaskPair mp0 = activation_masks(b.mesh, 0);
  Mat h0 = hidden_from_field(m, hier, t0, mp0.active_vec(), mp0.material_vec(),
                             m.interlayer->config().hidden);
  std::vector<Mat> latents = m.interlayer->rollout(hier, mask_inputs, mask_of_step, globals, h0);
  return decode_latents_c(*m.vgae, hier, latents);
}

std::vector<Vec> intralayer_rollout(const MultiscaleModels& m, const SimulationBundle& b,
                                    const MeshHierarchy& hier, const LayerSeq& seq,
                                    const std::vector<int>& record_steps, const Vec& start_field_c) {
  if (record_steps.empty()) return {};
  MaskPair mp = activation_masks(b.mesh, seq.layer);
  Mat h0 = hidden_from_field(m, hier, start_field_c, mp.active_vec(), mp.material_vec(),
                             m.intralayer->config().hidden);
  std::vector<Mat> mask_inputs{mask_channels(b, record_steps.front())};
  std::vector<int> mask_of_step(record_steps.size(), 0);
  Mat globals = intralayer_globals(b, seq, record_steps, m.dx_scale_mm, m.power_scale_w);
  std::vector<Mat> latents = m.intralayer->rollout(hier, mask_inputs, mask_of_step, globals, h0);
  return decode_latents_c(*m.vgae, hier, latents);
}

Vec extend_to_layer(const SimulationBundle& b, const LayerPartition& part, int layer,
                    const Vec& prev_terminal_c, double ambient_c) {
  MaskPair now = activation_masks(b.mesh, layer);
  Vec out = Vec::Zero(b.mesh.num_nodes());
  if (layer == 0) throw ValidationError("extend_to_layer: layer 0 has no predecessor");
  MaskPair before = activation_masks(b.mesh, layer - 1);
  for (int i = 0; i < b.mesh.num_nodes(); ++i) {
    std::size_t iu = static_cast<std::size_t>(i);
    if (now.active[iu] == 0) continue;
    out(i) = before.active[iu] != 0 ? prev_terminal_c(i) : ambient_c;
  }
  (void)part;
  return out;
}

LmRgnnPrediction lm_rgnn_predict(const MultiscaleModels& m, const SimulationBundle& truth,
                                 const MeshHierarchy& hier, int subsample_rate, bool parallel,
                                 bool teacher_start) {
  LayerPartition part = partition_layers(truth);
  const int L = static_cast<int>(part.layers.size());
  // record 0 is the uniform ambient field on layer 0's active set
  double ambient = 20.0;
  for (int i = 0; i < truth.mesh.num_nodes(); ++i) {
    if (truth.active[0][static_cast<std::size_t>(i)] != 0) {
      ambient = truth.temps_c[0](i);
      break;
    }
  }

  LmRgnnPrediction pred;
  pred.terminal_fields_c = interlayer_rollout(m, truth, hier, part);

  // per-layer subsampled record lists (terminals always kept)
  std::vector<std::vector<int>> layer_records(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    const LayerSeq& seq = part.layers[static_cast<std::size_t>(l)];
    int n = static_cast<int>(seq.target_steps.size());
    std::vector<int> keep = train::subsample_indices(n, subsample_rate, {n - 1});
    for (int k : keep) {
      layer_records[static_cast<std::size_t>(l)].push_back(
          seq.target_steps[static_cast<std::size_t>(k)]);
    }
  }

  auto run_layer = [&](int l) {
    const LayerSeq& seq = part.layers[static_cast<std::size_t>(l)];
    Vec start;
    if (l == 0) {
      start = truth.temps_c[0];
    } else if (teacher_start) {
      int prev_term = part.layers[static_cast<std::size_t>(l) - 1].terminal_step();
      start = extend_to_layer(truth, part, l, truth.temps_c[static_cast<std::size_t>(prev_term)],
                              ambient);
    } else {
      start = extend_to_layer(truth, part, l, pred.terminal_fields_c[static_cast<std::size_t>(l) - 1],
                              ambient);
    }
    return intralayer_rollout(m, truth, hier, seq, layer_records[static_cast<std::size_t>(l)], start);
  };

  std::vector<std::vector<Vec>> per_layer(static_cast<std::size_t>(L));
  if (parallel) {
    std::vector<std::future<std::vector<Vec>>> futures;
    for (int l = 0; l < L; ++l) {
      futures.push_back(std::async(std::launch::async, run_layer, l));
    }
    for (int l = 0; l < L; ++l) per_layer[static_cast<std::size_t>(l)] = futures[static_cast<std::size_t>(l)].get();
  } else {
    for (int l = 0; l < L; ++l) per_layer[static_cast<std::size_t>(l)] = run_layer(l);
  }

  for (int l = 0; l < L; ++l) {
    const auto& recs = layer_records[static_cast<std::size_t>(l)];
    for (std::size_t k = 0; k < recs.size(); ++k) {
      int s = recs[k];
      Vec field = per_layer[static_cast<std::size_t>(l)][k];
      for (int i = 0; i < truth.mesh.num_nodes(); ++i) {
        if (truth.active[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)] == 0) {
          field(i) = 0.0;
        }
      }
      pred.record_steps.push_back(s);
      pred.temps_c.push_back(std::move(field));
    }
  }
  return pred;
}

std::vector<Vec> persistence_prediction(const SimulationBundle& b, const LayerPartition& part,
                                        const std::vector<int>& record_steps, double ambient_c) {
  std::vector<Vec> out;
  for (int s : record_steps) {
    int layer = b.layer_index[static_cast<std::size_t>(s)];
    Vec field;
    if (layer == 0) {
      field = b.temps_c[0];
    } else {
      int prev_term = part.layers[static_cast<std::size_t>(layer) - 1].terminal_step();
      field = extend_to_layer(b, part, layer, b.temps_c[static_cast<std::size_t>(prev_term)],
                              ambient_c);
    }
    for (int i = 0; i < b.mesh.num_nodes(); ++i) {
      if (b.active[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)] == 0) field(i) = 0.0;
    }
    out.push_back(std::move(field));
  }
  return out;
}

}  // namespace thermesh::nn
