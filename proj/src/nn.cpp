#include "thermesh/nn.hpp"

namespace thermesh::nn {

Var activate(Tape& t, Var x, Activation a) {
  switch (a) {
    case Activation::Silu: return t.silu(x);
    case Activation::Tanh: return t.tanh(x);
    case Activation::Relu: return t.relu(x);
  }
  throw ValidationError("unknown activation");
}

Mlp Mlp::create(ParamRegistry& reg, RngStream& rng, const std::string& prefix, MlpSpec spec) {
  if (spec.sizes.size() < 2) throw ValidationError("mlp: need at least [in, out] sizes");
  Mlp m;
  m.spec_ = spec;
  for (std::size_t i = 0; i + 1 < spec.sizes.size(); ++i) {
    Parameter& w = reg.create(prefix + ".w" + std::to_string(i), spec.sizes[i], spec.sizes[i + 1]);
    init_uniform_fanin(w, rng);
    Parameter& b = reg.create(prefix + ".b" + std::to_string(i), 1, spec.sizes[i + 1]);
    m.weights_.push_back(&w);
    m.biases_.push_back(&b);
  }
  if (spec.norm_input) {
    Parameter& g = reg.create(prefix + ".ln_g", 1, spec.sizes.front());
    g.value.setOnes();
    Parameter& s = reg.create(prefix + ".ln_b", 1, spec.sizes.front());
    m.ln_gain_ = &g;
    m.ln_shift_ = &s;
  }
  return m;
}

Var Mlp::forward(Tape& t, Var x) const {
  if (t.value(x).cols() != spec_.sizes.front()) {
    throw ValidationError("mlp: input dim " + std::to_string(t.value(x).cols()) +
                          " does not match spec " + std::to_string(spec_.sizes.front()));
  }
  Var h = x;
  if (ln_gain_ != nullptr) {
    h = t.layer_norm(h, t.param(*ln_gain_), t.param(*ln_shift_));
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    h = t.add_row(t.matmul(h, t.param(*weights_[i])), t.param(*biases_[i]));
    if (i + 1 < weights_.size()) h = activate(t, h, spec_.act);
  }
  return h;
}

LayerNorm LayerNorm::create(ParamRegistry& reg, const std::string& prefix, int dim) {
  LayerNorm ln;
  Parameter& g = reg.create(prefix + ".ln_g", 1, dim);
  g.value.setOnes();
  Parameter& s = reg.create(prefix + ".ln_b", 1, dim);
  ln.gain_ = &g;
  ln.shift_ = &s;
  return ln;
}

Var LayerNorm::forward(Tape& t, Var x) const {
  return t.layer_norm(x, t.param(*gain_), t.param(*shift_));
}

MessagePass MessagePass::create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                                MessagePassSpec spec) {
  MessagePass mp;
  mp.spec_ = spec;
  Parameter& ew = reg.create(prefix + ".enc.w", spec.node_in, spec.hidden);
  init_uniform_fanin(ew, rng);
  Parameter& eb = reg.create(prefix + ".enc.b", 1, spec.hidden);
  mp.enc_w_ = &ew;
  mp.enc_b_ = &eb;
  auto mlp_sizes = [&](int in) {
    std::vector<int> sizes{in};
    for (int l = 1; l < spec.mlp_layers; ++l) sizes.push_back(spec.hidden);
    sizes.push_back(spec.hidden);
    return sizes;
  };
  for (int b = 0; b < spec.blocks; ++b) {
    MlpSpec es{mlp_sizes(2 * spec.hidden + spec.edge_in + spec.global_in), spec.act, false};
    mp.edge_mlps_.push_back(Mlp::create(reg, rng, prefix + ".blk" + std::to_string(b) + ".edge", es));
    MlpSpec ns{mlp_sizes(2 * spec.hidden + spec.global_in), spec.act, false};
    mp.node_mlps_.push_back(Mlp::create(reg, rng, prefix + ".blk" + std::to_string(b) + ".node", ns));
  }
  Parameter& hw = reg.create(prefix + ".head.w", spec.hidden, spec.out);
  init_uniform_fanin(hw, rng);
  Parameter& hb = reg.create(prefix + ".head.b", 1, spec.out);
  mp.head_w_ = &hw;
  mp.head_b_ = &hb;
  return mp;
}

Var MessagePass::forward(Tape& t, const GraphTopology& g, Var nodes, Var edge_feat,
                         Var globals_rows) const {
  if (t.value(nodes).cols() != spec_.node_in) {
    throw ValidationError("message_pass: node feature dim mismatch");
  }
  bool has_g = spec_.global_in > 0;
  if (has_g && (!globals_rows.valid() || t.value(globals_rows).cols() != spec_.global_in)) {
    throw ValidationError("message_pass: global attribute dim mismatch");
  }
  Var h = t.add_row(t.matmul(nodes, t.param(*enc_w_)), t.param(*enc_b_));
  for (int b = 0; b < spec_.blocks; ++b) {
    for (int rep = 0; rep < spec_.depth; ++rep) {
      std::vector<Var> eparts{t.gather_rows(h, g.edge_src), t.gather_rows(h, g.edge_dst), edge_feat};
      if (has_g) eparts.push_back(t.gather_rows(globals_rows, g.edge_dst));
      Var messages = edge_mlps_[static_cast<std::size_t>(b)].forward(t, t.concat_cols(eparts));
      Var agg = t.scatter_sum(messages, g.edge_dst, g.num_nodes);
      std::vector<Var> nparts{h, agg};
      if (has_g) nparts.push_back(globals_rows);
      Var upd = node_mlps_[static_cast<std::size_t>(b)].forward(t, t.concat_cols(nparts));
      h = t.add(h, upd);
    }
  }
  return t.add_row(t.matmul(h, t.param(*head_w_)), t.param(*head_b_));
}

GatConv GatConv::create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                        GatConvSpec spec) {
  GatConv c;
  c.spec_ = spec;
  auto mk = [&](const char* name, int rows, int cols, bool init) -> Parameter* {
    Parameter& p = reg.create(prefix + "." + name, rows, cols);
    if (init) init_uniform_fanin(p, rng);
    return &p;
  };
  c.w_src_ = mk("w_src", spec.node_in, spec.out, true);
  c.w_dst_ = mk("w_dst", spec.node_in, spec.out, true);
  c.w_edge_ = mk("w_edge", spec.edge_in, spec.out, true);
  c.score_b_ = mk("score_b", 1, spec.out, false);
  c.att_ = mk("att", spec.out, 1, true);
  c.out_b_ = mk("out_b", 1, spec.out, false);
  return c;
}

Var GatConv::scores(Tape& t, const GraphTopology& g, Var nodes, Var edge_feat,
                    std::vector<int>* dst_out, Var* val_src_out) const {
  if (t.value(nodes).cols() != spec_.node_in) {
    throw ValidationError("attention_conv: node feature dim mismatch");
  }
  // extend the edge set with one self-loop per node (zero edge features)
  std::vector<int> src = g.edge_src, dst = g.edge_dst;
  for (int i = 0; i < g.num_nodes; ++i) {
    src.push_back(i);
    dst.push_back(i);
  }
  Var efeat_all = t.concat_rows(
      {edge_feat, t.constant(Mat::Zero(g.num_nodes, t.value(edge_feat).cols()))});

  Var xs = t.matmul(t.gather_rows(nodes, src), t.param(*w_src_));
  Var xd = t.matmul(t.gather_rows(nodes, dst), t.param(*w_dst_));
  Var xe = t.matmul(efeat_all, t.param(*w_edge_));
  Var pre = t.add_row(t.add(t.add(xs, xd), xe), t.param(*score_b_));
  Var score = t.matmul(t.leaky_relu(pre, spec_.leaky_slope), t.param(*att_));
  *dst_out = dst;
  *val_src_out = xs;
  return score;
}

Var GatConv::attention(Tape& t, const GraphTopology& g, Var nodes, Var edge_feat) const {
  std::vector<int> dst;
  Var val;
  Var s = scores(t, g, nodes, edge_feat, &dst, &val);
  return t.segment_softmax(s, dst, g.num_nodes);
}

Var GatConv::forward(Tape& t, const GraphTopology& g, Var nodes, Var edge_feat) const {
  std::vector<int> dst;
  Var val;
  Var s = scores(t, g, nodes, edge_feat, &dst, &val);
  Var alpha = t.segment_softmax(s, dst, g.num_nodes);
  Var weighted = t.mul(val, t.matmul(alpha, t.constant(Mat::Ones(1, spec_.out))));
  return t.add_row(t.scatter_sum(weighted, dst, g.num_nodes), t.param(*out_b_));
}

Var masked_mse(Tape& t, Var pred, const Mat& target, const Vec& mask,
               const std::vector<int>& node_sample, int num_samples) {
  if (t.value(pred).rows() != target.rows() || t.value(pred).cols() != target.cols()) {
    throw ValidationError("masked_mse: prediction/target shape mismatch");
  }
  Vec counts = Vec::Zero(num_samples);
  for (std::size_t i = 0; i < node_sample.size(); ++i) {
    counts(node_sample[i]) += mask(static_cast<Eigen::Index>(i));
  }
  for (int s = 0; s < num_samples; ++s) {
    if (counts(s) <= 0) throw ValidationError("masked_mse: sample with empty mask");
  }
  Var diff = t.sub(pred, t.constant(target));
  Var sq = t.square(diff);
  Var masked = t.row_scale(sq, mask);
  // per-sample sums, then per-sample normalization, then mean over samples
  Var per_sample = t.scatter_sum(masked, node_sample, num_samples);
  Var col_sum = t.matmul(per_sample, t.constant(Mat::Ones(t.value(pred).cols(), 1)));
  Var normalized = t.row_scale(col_sum, counts.cwiseInverse());
  return t.scale(t.sum(normalized), 1.0 / num_samples);
}

}  // namespace thermesh::nn
