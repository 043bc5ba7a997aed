#pragma once

#include <string>
#include <vector>

#include "thermesh/bundle.hpp"
#include "thermesh/hierarchy.hpp"
#include "thermesh/recurrent.hpp"

namespace thermesh::nn {

/// One layer's slice of a simulation: the record holding the layer's start
/// field, the in-layer records, and coarse process descriptors.
struct LayerSeq {
  int layer = 0;
  int start_step = 0;               // record index of the layer-start field
  std::vector<int> target_steps;    // record indices inside the layer
  double width_mm = 0.0;            // scanned metal width
  double print_duration_s = 0.0;
  double cooling_duration_s = 0.0;

  int terminal_step() const { return target_steps.back(); }
};

struct LayerPartition {
  std::vector<LayerSeq> layers;
};

/// Exact partition of a bundle's records by deposition layer; descriptors are
/// computed from the geometry and the recorded process trace.
LayerPartition partition_layers(const SimulationBundle& bundle);

/// Min-max descriptor normalization fitted on the training split; persisted
/// as a frozen parameter tensor next to the interlayer weights.
struct DescriptorNorm {
  double width_lo = 0.0, width_hi = 1.0;
  double print_lo = 0.0, print_hi = 1.0;
  double cool_lo = 0.0, cool_hi = 1.0;

  Eigen::RowVectorXd normalize(const LayerSeq& seq) const;
  static DescriptorNorm fit(const std::vector<LayerPartition>& parts);
  Mat to_mat() const;
  static DescriptorNorm from_mat(const Mat& m);
};

/// Per-record fine-scale globals within a layer: laser travel and power
/// change since the previous record, the heating flag, and layer progress.
Mat intralayer_globals(const SimulationBundle& b, const LayerSeq& seq,
                       const std::vector<int>& record_steps, double dx_scale_mm,
                       double power_scale_w);

/// Interlayer + intralayer latent models sharing a frozen VGAE.
struct MultiscaleModels {
  const LatentRgnn* interlayer = nullptr;
  const LatentRgnn* intralayer = nullptr;
  const Vgae* vgae = nullptr;
  DescriptorNorm norm;
  double dx_scale_mm = 1.0;
  double power_scale_w = 175.0;
};

/// Builds the [m | mu] mask channel matrix of a record.
Mat mask_channels(const SimulationBundle& b, int step);

/// Encodes a start field (degC, with the given record's masks) into a padded
/// latent hidden state via the VGAE encoder mean.
Mat hidden_from_field(const MultiscaleModels& m, const MeshHierarchy& hier, const Vec& temps_c,
                      const Vec& active, const Vec& material, int hidden);

/// Interlayer rollout: one latent step per layer, decoded layer-terminal
/// fields in degC (full mesh, unmasked).
std::vector<Vec> interlayer_rollout(const MultiscaleModels& m, const SimulationBundle& b,
                                    const MeshHierarchy& hier, const LayerPartition& part);

/// Intralayer rollout for one layer conditioned on a start field. Returns
/// temperatures for each of the layer's subsampled records.
std::vector<Vec> intralayer_rollout(const MultiscaleModels& m, const SimulationBundle& b,
                                    const MeshHierarchy& hier, const LayerSeq& seq,
                                    const std::vector<int>& record_steps, const Vec& start_field_c);

struct LmRgnnPrediction {
  std::vector<int> record_steps;       // truth record indices predicted
  std::vector<Vec> temps_c;            // aligned with record_steps, masked
  std::vector<Vec> terminal_fields_c;  // per layer, full mesh
};

/// Composed prediction: the sequential interlayer pass first, then intralayer
/// rollouts for every layer (parallel across layers unless serial), stitched
/// into the full history. teacher_start conditions each layer on the true
/// start field instead of the interlayer prediction.
LmRgnnPrediction lm_rgnn_predict(const MultiscaleModels& m, const SimulationBundle& truth,
                                 const MeshHierarchy& hier, int subsample_rate, bool parallel,
                                 bool teacher_start = false);

/// Start field for a layer given the previous layer's terminal field: newly
/// activated nodes enter at ambient.
Vec extend_to_layer(const SimulationBundle& b, const LayerPartition& part, int layer,
                    const Vec& prev_terminal_c, double ambient_c);

/// Reference predictor that freezes each layer at its ground-truth start
/// field (the previous layer's terminal, extended by ambient).
std::vector<Vec> persistence_prediction(const SimulationBundle& b, const LayerPartition& part,
                                        const std::vector<int>& record_steps, double ambient_c);

}  // namespace thermesh::nn
