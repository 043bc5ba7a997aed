#pragma once

#include <string>
#include <vector>

#include "thermesh/vgae.hpp"

namespace thermesh::nn {

/// GRU cell whose linear maps are message-passing networks:
///   Z = sigmoid(MP_z(X | H, g)), R = sigmoid(MP_r(X | H, g)),
///   Hcand = tanh(MP_h(X | R*H, g)), H' = (1 - Z)*H + Z*Hcand.
struct GraphGruConfig {
  int x_dim = 2;
  int hidden = 32;
  int global_dim = 0;
  int mp_hidden = 32;
  int mp_blocks = 1;
  int mp_depth = 1;
  int mp_layers = 2;
};

class GraphGru {
public:
  static GraphGru create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                         GraphGruConfig cfg);

  /// globals_rows: [n x global_dim] per-node global attribute rows (invalid
  /// Var when global_dim == 0).
  Var step(Tape& t, const GraphTopology& g, Var x, Var h_prev, Var globals_rows) const;

  const GraphGruConfig& config() const { return cfg_; }

private:
  GraphGruConfig cfg_;
  MessagePass mp_z_, mp_r_, mp_h_;
};

/// Hidden state initialization: channel 0 carries the normalized initial
/// temperature, remaining channels are zero.
Mat init_hidden(const Vec& temps_c, const Vec& active, int hidden);

/// Full-field recurrent rollout: X_t = m_t | mu_t, hidden is masked after
/// every step, channel 0 denormalizes to the predicted temperature.
struct RgnnStepInput {
  Vec active;    // m_t
  Vec material;  // mu_t
  Eigen::RowVectorXd globals;
};

class Rgnn {
public:
  static Rgnn create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                     GraphGruConfig cfg);

  /// One taped step (training); returns the new hidden state.
  Var step(Tape& t, const GraphTopology& g, const RgnnStepInput& in, Var h_prev) const;

  /// Sequential inference rollout; returns per-step temperatures in degC
  /// (zero on inactive nodes). Memory stays flat: one tape per step.
  std::vector<Vec> rollout(const GraphTopology& g, const std::vector<RgnnStepInput>& steps,
                           const Mat& h0) const;

  const GraphGru& gru() const { return gru_; }

private:
  GraphGru gru_;
};

/// Pool-stack projecting full-mesh auxiliary channels (active/material masks)
/// onto the latent mesh.
struct GeometryEncoderConfig {
  int in_channels = 2;
  std::vector<int> hidden = {8, 16, 16};
  int pool_hidden = 16;
  int pool_layers = 2;
  int out = 16;

  void validate(int depth) const;
};

class GeometryEncoder {
public:
  static GeometryEncoder create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                                GeometryEncoderConfig cfg);

  Var forward(Tape& t, const HierarchyRef& h, Var masks01) const;
  const GeometryEncoderConfig& config() const { return cfg_; }

private:
  GeometryEncoderConfig cfg_;
  std::vector<Mlp> pool_mlps_;
};

/// Recurrent model on the latent mesh. Per step the GraphGRU consumes the
/// pooled mask features; the first latent_dim hidden channels form the latent
/// field, decoded through the frozen VGAE decoder.
struct LatentRgnnConfig {
  int hidden = 32;
  int latent_dim = 16;
  int global_dim = 4;
  GeometryEncoderConfig geometry;
  int mp_hidden = 32;
  int mp_blocks = 1;
  int mp_depth = 1;
  int mp_layers = 2;
};

class LatentRgnn {
public:
  static LatentRgnn create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                           LatentRgnnConfig cfg);

  /// Zero-pads a latent mean [nd x latent_dim] to the hidden width.
  Mat hidden_from_latent(const Mat& latent_mean) const;

  Var encode_geometry(Tape& t, const HierarchyRef& h, Var masks01) const;

  /// One taped recurrent step on the latent mesh.
  Var step(Tape& t, const GraphTopology& latent_topo, Var mask_feats, Var h_prev,
           Var globals_rows) const;

  Var latent_of_hidden(Tape& t, Var h) const;

  /// Inference rollout: per-step latent means. Mask features are recomputed
  /// only when the mask changes (mask_change[t] marks activation steps).
  std::vector<Mat> rollout(const MeshHierarchy& hier, const std::vector<Mat>& mask_inputs,
                           const std::vector<int>& mask_of_step, const Mat& globals,
                           const Mat& h0) const;

  const LatentRgnnConfig& config() const { return cfg_; }
  const GraphGru& gru() const { return gru_; }

private:
  LatentRgnnConfig cfg_;
  GraphGru gru_;
  GeometryEncoder genc_;
};

/// Decodes a sequence of latent fields in batches through the frozen decoder;
/// bit-identical to one-by-one decoding. Returns temperatures in degC on the
/// full mesh (not masked).
std::vector<Vec> decode_latents_c(const Vgae& vgae, const MeshHierarchy& hier,
                                  const std::vector<Mat>& latents, int batch = 16);

}  // namespace thermesh::nn
