#pragma once

#include <string>
#include <vector>

#include "thermesh/graph.hpp"
#include "thermesh/params.hpp"
#include "thermesh/tape.hpp"

namespace thermesh::nn {

using ad::Parameter;
using ad::ParamRegistry;
using ad::Tape;
using ad::Var;

enum class Activation { Silu, Tanh, Relu };

Var activate(Tape& t, Var x, Activation a);

/// Multilayer perceptron. sizes = [in, hidden..., out]; the activation is
/// applied between affine layers, not after the last. With norm_input the
/// input passes through a learned LayerNorm first.
struct MlpSpec {
  std::vector<int> sizes;
  Activation act = Activation::Silu;
  bool norm_input = false;
};

class Mlp {
public:
  static Mlp create(ParamRegistry& reg, RngStream& rng, const std::string& prefix, MlpSpec spec);

  Var forward(Tape& t, Var x) const;
  int in_dim() const { return spec_.sizes.front(); }
  int out_dim() const { return spec_.sizes.back(); }

private:
  MlpSpec spec_;
  std::vector<Parameter*> weights_;
  std::vector<Parameter*> biases_;
  Parameter* ln_gain_ = nullptr;
  Parameter* ln_shift_ = nullptr;
};

/// Standalone learned layer normalization over the feature axis.
class LayerNorm {
public:
  static LayerNorm create(ParamRegistry& reg, const std::string& prefix, int dim);
  Var forward(Tape& t, Var x) const;

private:
  Parameter* gain_ = nullptr;
  Parameter* shift_ = nullptr;
};

/// Message-passing processor: an input projection to the working width, then
/// `blocks` graph-network blocks (edge MLP on source|target|edge|globals,
/// sum aggregation, node MLP with a residual connection), each repeated
/// `depth` times with shared weights, and a linear output head.
struct MessagePassSpec {
  int node_in = 0;
  int edge_in = 3;
  int global_in = 0;
  int hidden = 32;
  int out = 32;
  int blocks = 1;
  int depth = 1;
  int mlp_layers = 2;  // affine layers per edge/node MLP
  Activation act = Activation::Silu;
};

class MessagePass {
public:
  static MessagePass create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                            MessagePassSpec spec);

  /// globals_rows: per-node global attribute rows [n x global_in] (pass an
  /// empty Var when global_in == 0).
  Var forward(Tape& t, const GraphTopology& g, Var nodes, Var edge_feat, Var globals_rows) const;

  const MessagePassSpec& spec() const { return spec_; }

private:
  MessagePassSpec spec_;
  Parameter* enc_w_ = nullptr;
  Parameter* enc_b_ = nullptr;
  std::vector<Mlp> edge_mlps_;
  std::vector<Mlp> node_mlps_;
  Parameter* head_w_ = nullptr;
  Parameter* head_b_ = nullptr;
};

/// Graph attention convolution with the two-stage transform-then-score
/// formulation; edge features enter the scoring input. A self-loop with zero
/// edge features is added for every node, so isolated nodes stay well-defined.
struct GatConvSpec {
  int node_in = 0;
  int edge_in = 3;
  int out = 0;
  double leaky_slope = 0.2;
};

class GatConv {
public:
  static GatConv create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                        GatConvSpec spec);

  Var forward(Tape& t, const GraphTopology& g, Var nodes, Var edge_feat) const;
  /// Attention weights over (graph edges + self-loops), for inspection/tests.
  Var attention(Tape& t, const GraphTopology& g, Var nodes, Var edge_feat) const;

private:
  Var scores(Tape& t, const GraphTopology& g, Var nodes, Var edge_feat,
             std::vector<int>* dst_out, Var* val_src_out) const;

  GatConvSpec spec_;
  Parameter* w_src_ = nullptr;
  Parameter* w_dst_ = nullptr;
  Parameter* w_edge_ = nullptr;
  Parameter* score_b_ = nullptr;
  Parameter* att_ = nullptr;
  Parameter* out_b_ = nullptr;
};

/// Mean over samples of per-sample mask-normalized squared error:
/// (1/N) sum_b (1/|m_b|) sum_i m_i (pred_i - target_i)^2.
/// node_sample maps rows to samples; masks enter as fixed weights.
Var masked_mse(Tape& t, Var pred, const Mat& target, const Vec& mask,
               const std::vector<int>& node_sample, int num_samples);

}  // namespace thermesh::nn
