#include "thermesh/recurrent.hpp"

namespace thermesh::nn {

GraphGru GraphGru::create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                          GraphGruConfig cfg) {
  GraphGru g;
  g.cfg_ = cfg;
  MessagePassSpec mp;
  mp.node_in = cfg.x_dim + cfg.hidden;
  mp.edge_in = 3;
  mp.global_in = cfg.global_dim;
  mp.hidden = cfg.mp_hidden;
  mp.out = cfg.hidden;
  mp.blocks = cfg.mp_blocks;
  mp.depth = cfg.mp_depth;
  mp.mlp_layers = cfg.mp_layers;
  g.mp_z_ = MessagePass::create(reg, rng, prefix + ".mp_z", mp);
  g.mp_r_ = MessagePass::create(reg, rng, prefix + ".mp_r", mp);
  g.mp_h_ = MessagePass::create(reg, rng, prefix + ".mp_h", mp);
  return g;
}

Var GraphGru::step(Tape& t, const GraphTopology& g, Var x, Var h_prev, Var globals_rows) const {
  if (t.value(x).cols() != cfg_.x_dim) throw ValidationError("graph_gru: input dim mismatch");
  if (t.value(h_prev).cols() != cfg_.hidden) throw ValidationError("graph_gru: hidden dim mismatch");
  if (t.value(x).rows() != t.value(h_prev).rows()) {
    throw ValidationError("graph_gru: input and hidden must live on the same node set");
  }
  Var efeat = t.constant(g.edge_feat);
  Var xh = t.concat_cols({x, h_prev});
  Var z = t.sigmoid(mp_z_.forward(t, g, xh, efeat, globals_rows));
  Var r = t.sigmoid(mp_r_.forward(t, g, xh, efeat, globals_rows));
  Var x_rh = t.concat_cols({x, t.mul(r, h_prev)});
  Var h_cand = t.tanh(mp_h_.forward(t, g, x_rh, efeat, globals_rows));
  Var keep = t.sub(t.constant(Mat::Ones(t.value(z).rows(), t.value(z).cols())), z);
  return t.add(t.mul(keep, h_prev), t.mul(z, h_cand));
}

Mat init_hidden(const Vec& temps_c, const Vec& active, int hidden) {
  Mat h = Mat::Zero(temps_c.size(), hidden);
  for (Eigen::Index i = 0; i < temps_c.size(); ++i) {
    if (active(i) != 0.0) h(i, 0) = normalize_temp(temps_c(i));
  }
  return h;
}

Rgnn Rgnn::create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                  GraphGruConfig cfg) {
  Rgnn r;
  r.gru_ = GraphGru::create(reg, rng, prefix, cfg);
  return r;
}

Var Rgnn::step(Tape& t, const GraphTopology& g, const RgnnStepInput& in, Var h_prev) const {
  Mat x(in.active.size(), 2);
  x.col(0) = in.active;
  x.col(1) = in.material;
  Var xv = t.constant(x);
  Var gl;
  if (gru_.config().global_dim > 0) {
    Mat grow(1, in.globals.size());
    grow.row(0) = in.globals;
    gl = t.broadcast_row(t.constant(grow), g.num_nodes);
  }
  Var h = gru_.step(t, g, xv, h_prev, gl);
  return t.row_scale(h, in.active);  // masked-out nodes carry zero features
}

std::vector<Vec> Rgnn::rollout(const GraphTopology& g, const std::vector<RgnnStepInput>& steps,
                               const Mat& h0) const {
  std::vector<Vec> out;
  Mat h = h0;
  for (const RgnnStepInput& in : steps) {
    Tape t;
    Var hv = t.constant(h);
    Var hn = step(t, g, in, hv);
    h = t.value(hn);
    Vec temps(h.rows());
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      temps(i) = in.active(i) != 0.0 ? denormalize_temp(h(i, 0)) : 0.0;
    }
    out.push_back(std::move(temps));
  }
  return out;
}

void GeometryEncoderConfig::validate(int depth) const {
  if (static_cast<int>(hidden.size()) != depth) {
    throw ValidationError("geometry encoder: hidden sizes must have one entry per level");
  }
  if (hidden.back() != out) {
    throw ValidationError("geometry encoder: last hidden size must equal the output size");
  }
}

GeometryEncoder GeometryEncoder::create(ParamRegistry& reg, RngStream& rng,
                                        const std::string& prefix, GeometryEncoderConfig cfg) {
  GeometryEncoder e;
  e.cfg_ = cfg;
  int ch = cfg.in_channels;
  for (std::size_t p = 0; p < cfg.hidden.size(); ++p) {
    std::vector<int> sizes{3 + ch};
    for (int l = 1; l < cfg.pool_layers; ++l) sizes.push_back(cfg.pool_hidden);
    sizes.push_back(cfg.hidden[p]);
    MlpSpec ms{sizes, Activation::Silu, true};
    e.pool_mlps_.push_back(Mlp::create(reg, rng, prefix + ".pool" + std::to_string(p), ms));
    ch = cfg.hidden[p];
  }
  return e;
}

Var GeometryEncoder::forward(Tape& t, const HierarchyRef& h, Var masks01) const {
  if (h.depth() != static_cast<int>(pool_mlps_.size())) {
    throw ValidationError("geometry encoder: hierarchy depth does not match config");
  }
  Var x = masks01;
  for (int p = 0; p < h.depth(); ++p) {
    x = graph_pool(t, *h.pools[static_cast<std::size_t>(p)],
                   h.topos[static_cast<std::size_t>(p) + 1]->num_nodes, x,
                   pool_mlps_[static_cast<std::size_t>(p)]);
  }
  return x;
}

LatentRgnn LatentRgnn::create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                              LatentRgnnConfig cfg) {
  if (cfg.latent_dim > cfg.hidden) {
    throw ValidationError("latent_rgnn: hidden width must cover the latent dim");
  }
  cfg.geometry.validate(static_cast<int>(cfg.geometry.hidden.size()));
  LatentRgnn m;
  m.cfg_ = cfg;
  GraphGruConfig gc;
  gc.x_dim = cfg.geometry.out;
  gc.hidden = cfg.hidden;
  gc.global_dim = cfg.global_dim;
  gc.mp_hidden = cfg.mp_hidden;
  gc.mp_blocks = cfg.mp_blocks;
  gc.mp_depth = cfg.mp_depth;
  gc.mp_layers = cfg.mp_layers;
  m.gru_ = GraphGru::create(reg, rng, prefix + ".gru", gc);
  m.genc_ = GeometryEncoder::create(reg, rng, prefix + ".genc", cfg.geometry);
  return m;
}

Mat LatentRgnn::hidden_from_latent(const Mat& latent_mean) const {
  if (latent_mean.cols() != cfg_.latent_dim) {
    throw ValidationError("latent_rgnn: latent mean width mismatch");
  }
  Mat h = Mat::Zero(latent_mean.rows(), cfg_.hidden);
  h.leftCols(cfg_.latent_dim) = latent_mean;
  return h;
}

Var LatentRgnn::encode_geometry(Tape& t, const HierarchyRef& h, Var masks01) const {
  return genc_.forward(t, h, masks01);
}

Var LatentRgnn::step(Tape& t, const GraphTopology& latent_topo, Var mask_feats, Var h_prev,
                     Var globals_rows) const {
  return gru_.step(t, latent_topo, mask_feats, h_prev, globals_rows);
}

Var LatentRgnn::latent_of_hidden(Tape& t, Var h) const {
  return t.slice_cols(h, 0, cfg_.latent_dim);
}

std::vector<Mat> LatentRgnn::rollout(const MeshHierarchy& hier, const std::vector<Mat>& mask_inputs,
                                     const std::vector<int>& mask_of_step, const Mat& globals,
                                     const Mat& h0) const {
  const GraphTopology& ltopo = hier.latent_level().topo;
  HierarchyRef hr = HierarchyRef::of(hier);

  // mask features only change on activation steps; encode each distinct mask once
  std::vector<Mat> feats;
  for (const Mat& m : mask_inputs) {
    Tape t;
    feats.push_back(t.value(encode_geometry(t, hr, t.constant(m))));
  }

  std::vector<Mat> latents;
  Mat h = h0;
  for (std::size_t k = 0; k < mask_of_step.size(); ++k) {
    Tape t;
    Var gl;
    if (cfg_.global_dim > 0) {
      Mat grow(1, globals.cols());
      grow.row(0) = globals.row(static_cast<Eigen::Index>(k));
      gl = t.broadcast_row(t.constant(grow), ltopo.num_nodes);
    }
    Var hn = step(t, ltopo, t.constant(feats[static_cast<std::size_t>(mask_of_step[k])]),
                  t.constant(h), gl);
    h = t.value(hn);
    latents.push_back(h.leftCols(cfg_.latent_dim));
  }
  return latents;
}

std::vector<Vec> decode_latents_c(const Vgae& vgae, const MeshHierarchy& hier,
                                  const std::vector<Mat>& latents, int batch) {
  std::vector<Vec> out;
  for (std::size_t at = 0; at < latents.size(); at += static_cast<std::size_t>(batch)) {
    std::size_t take = std::min(static_cast<std::size_t>(batch), latents.size() - at);
    std::vector<const MeshHierarchy*> reps(take, &hier);
    BatchedHierarchy bh = batch_hierarchies(reps);
    std::vector<Mat> zparts(latents.begin() + static_cast<std::ptrdiff_t>(at),
                            latents.begin() + static_cast<std::ptrdiff_t>(at + take));
    Tape t;
    Var z = t.constant(batch_rows(zparts));
    Var recon = vgae.decode(t, bh.ref(), z);
    std::vector<Mat> fields = unbatch_rows(t.value(recon), bh.level_node_offset[0]);
    for (const Mat& f : fields) {
      Vec temps(f.rows());
      for (Eigen::Index i = 0; i < f.rows(); ++i) temps(i) = denormalize_temp(f(i, 0));
      out.push_back(std::move(temps));
    }
  }
  return out;
}

}  // namespace thermesh::nn
