#pragma once

#include <string>
#include <vector>

#include "thermesh/bundle.hpp"
#include "thermesh/nn.hpp"

namespace thermesh::nn {

/// Windowed non-autoregressive baseline with explicitly decoupled spatial and
/// temporal stages: per-step graphs pass through a stacked residual graph
/// convolution encoder (no temporal mixing), then per-node stacked GRUs run
/// over the window (no graph ops), ending in a temperature head. Windows tile
/// the sequence without overlap and carry no state between each other.
struct BaselineConfig {
  int window = 50;
  int node_features = 7;  // x, y, m, mu, beam offset, S, power
  int embed = 48;
  int gcn_layers = 10;
  int gru_layers = 2;
  int gru_hidden = 48;

  void validate() const;
};

class DecoupledRgnn {
public:
  static DecoupledRgnn create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                              BaselineConfig cfg);

  /// Spatial stage on one step's graph: [n x node_features] -> [n x embed].
  Var spatial_encode(Tape& t, const GraphTopology& g, Var feats) const;

  /// Temporal stage over one window of embeddings (taped). Returns per-step
  /// normalized temperature columns [n x 1].
  std::vector<Var> temporal_decode(Tape& t, const std::vector<Var>& embeddings) const;

  /// Per-step input features for a bundle record.
  static Mat step_features(const SimulationBundle& b, int step, double domain_width_mm);

  /// Full-history prediction: tiles windows over the given record indices;
  /// sequences shorter than the window are padded by repeating the last step
  /// and truncated on output. Returns temperatures in degC, zero on inactive.
  std::vector<Vec> predict(const SimulationBundle& b, const std::vector<int>& record_steps) const;

  const BaselineConfig& config() const { return cfg_; }

private:
  BaselineConfig cfg_;
  Parameter* embed_w_ = nullptr;
  Parameter* embed_b_ = nullptr;
  std::vector<LayerNorm> gcn_norms_;
  std::vector<Parameter*> gcn_self_;
  std::vector<Parameter*> gcn_nbr_;
  std::vector<Parameter*> gcn_bias_;
  // stacked GRU cells (dense, weights shared across nodes)
  struct GruCell {
    Parameter *wz, *uz, *bz, *wr, *ur, *br, *wh, *uh, *bh;
  };
  std::vector<GruCell> gru_;
  Parameter* head_w_ = nullptr;
  Parameter* head_b_ = nullptr;

  Var gru_cell(Tape& t, const GruCell& c, Var x, Var h) const;
};

}  // namespace thermesh::nn
