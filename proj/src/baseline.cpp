#include "thermesh/baseline.hpp"

namespace thermesh::nn {

void BaselineConfig::validate() const {
  if (window < 1) throw ValidationError("baseline: window must be >= 1");
  if (gcn_layers < 1 || gru_layers < 1) throw ValidationError("baseline: layer counts must be >= 1");
}

DecoupledRgnn DecoupledRgnn::create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                                    BaselineConfig cfg) {
  cfg.validate();
  DecoupledRgnn m;
  m.cfg_ = cfg;
  Parameter& ew = reg.create(prefix + ".embed.w", cfg.node_features, cfg.embed);
  init_uniform_fanin(ew, rng);
  Parameter& eb = reg.create(prefix + ".embed.b", 1, cfg.embed);
  m.embed_w_ = &ew;
  m.embed_b_ = &eb;
  for (int l = 0; l < cfg.gcn_layers; ++l) {
    std::string base = prefix + ".gcn" + std::to_string(l);
    m.gcn_norms_.push_back(LayerNorm::create(reg, base, cfg.embed));
    Parameter& ws = reg.create(base + ".w_self", cfg.embed, cfg.embed);
    init_uniform_fanin(ws, rng);
    Parameter& wn = reg.create(base + ".w_nbr", cfg.embed, cfg.embed);
    init_uniform_fanin(wn, rng);
    Parameter& b = reg.create(base + ".b", 1, cfg.embed);
    m.gcn_self_.push_back(&ws);
    m.gcn_nbr_.push_back(&wn);
    m.gcn_bias_.push_back(&b);
  }
  int in = cfg.embed;
  for (int l = 0; l < cfg.gru_layers; ++l) {
    std::string base = prefix + ".gru" + std::to_string(l);
    GruCell c;
    auto mk = [&](const char* n, int r, int cdim, bool init) {
      Parameter& p = reg.create(base + "." + n, r, cdim);
      if (init) init_uniform_fanin(p, rng);
      return &p;
    };
    c.wz = mk("wz", in, cfg.gru_hidden, true);
    c.uz = mk("uz", cfg.gru_hidden, cfg.gru_hidden, true);
    c.bz = mk("bz", 1, cfg.gru_hidden, false);
    c.wr = mk("wr", in, cfg.gru_hidden, true);
    c.ur = mk("ur", cfg.gru_hidden, cfg.gru_hidden, true);
    c.br = mk("br", 1, cfg.gru_hidden, false);
    c.wh = mk("wh", in, cfg.gru_hidden, true);
    c.uh = mk("uh", cfg.gru_hidden, cfg.gru_hidden, true);
    c.bh = mk("bh", 1, cfg.gru_hidden, false);
    m.gru_.push_back(c);
    in = cfg.gru_hidden;
  }
  Parameter& hw = reg.create(prefix + ".head.w", cfg.gru_hidden, 1);
  init_uniform_fanin(hw, rng);
  Parameter& hb = reg.create(prefix + ".head.b", 1, 1);
  m.head_w_ = &hw;
  m.head_b_ = &hb;
  return m;
}

Var DecoupledRgnn::spatial_encode(Tape& t, const GraphTopology& g, Var feats) const {
  if (t.value(feats).cols() != cfg_.node_features) {
    throw ValidationError("baseline: node feature dim mismatch");
  }
  // mean-aggregation weights fixed by in-degree
  Vec deg = Vec::Zero(g.num_nodes);
  for (int d : g.edge_dst) deg(d) += 1.0;
  Vec inv_deg = deg.unaryExpr([](double v) { return v > 0 ? 1.0 / v : 0.0; });

  Var h = t.add_row(t.matmul(feats, t.param(*embed_w_)), t.param(*embed_b_));
  for (std::size_t l = 0; l < gcn_self_.size(); ++l) {
    Var u = gcn_norms_[l].forward(t, h);
    Var agg = t.row_scale(t.scatter_sum(t.gather_rows(u, g.edge_src), g.edge_dst, g.num_nodes),
                          inv_deg);
    Var mixed = t.add_row(
        t.add(t.matmul(u, t.param(*gcn_self_[l])), t.matmul(agg, t.param(*gcn_nbr_[l]))),
        t.param(*gcn_bias_[l]));
    h = t.add(h, t.silu(mixed));  // residual, pre-norm
  }
  return h;
}

Var DecoupledRgnn::gru_cell(Tape& t, const GruCell& c, Var x, Var h) const {
  Var z = t.sigmoid(t.add_row(t.add(t.matmul(x, t.param(*c.wz)), t.matmul(h, t.param(*c.uz))),
                              t.param(*c.bz)));
  Var r = t.sigmoid(t.add_row(t.add(t.matmul(x, t.param(*c.wr)), t.matmul(h, t.param(*c.ur))),
                              t.param(*c.br)));
  Var cand = t.tanh(t.add_row(
      t.add(t.matmul(x, t.param(*c.wh)), t.matmul(t.mul(r, h), t.param(*c.uh))), t.param(*c.bh)));
  Var keep = t.sub(t.constant(Mat::Ones(t.value(z).rows(), t.value(z).cols())), z);
  return t.add(t.mul(keep, h), t.mul(z, cand));
}

std::vector<Var> DecoupledRgnn::temporal_decode(Tape& t, const std::vector<Var>& embeddings) const {
  if (embeddings.empty()) throw ValidationError("baseline: empty window");
  Eigen::Index n = t.value(embeddings[0]).rows();
  std::vector<Var> hidden(gru_.size());
  for (std::size_t l = 0; l < gru_.size(); ++l) {
    hidden[l] = t.constant(Mat::Zero(n, cfg_.gru_hidden));
  }
  std::vector<Var> out;
  for (const Var& x : embeddings) {
    Var inp = x;
    for (std::size_t l = 0; l < gru_.size(); ++l) {
      hidden[l] = gru_cell(t, gru_[l], inp, hidden[l]);
      inp = hidden[l];
    }
    out.push_back(t.add_row(t.matmul(inp, t.param(*head_w_)), t.param(*head_b_)));
  }
  return out;
}

Mat DecoupledRgnn::step_features(const SimulationBundle& b, int step, double domain_width_mm) {
  const int n = b.mesh.num_nodes();
  Mat f(n, 7);
  double h = b.mesh.num_layers * b.mesh.layer_thickness_mm;
  for (int i = 0; i < n; ++i) {
    const auto& p = b.mesh.coords_mm[static_cast<std::size_t>(i)];
    std::size_t s = static_cast<std::size_t>(step);
    double active = b.active[s][static_cast<std::size_t>(i)];
    f(i, 0) = p.x() / domain_width_mm;
    f(i, 1) = p.y() / h;
    f(i, 2) = active;
    f(i, 3) = b.material[s][static_cast<std::size_t>(i)];
    f(i, 4) = active != 0.0 ? (p.x() - b.laser_x_mm[s]) / domain_width_mm : 0.0;
    f(i, 5) = b.heating[s];
    f(i, 6) = b.laser_power_w[s] > 0 ? 1.0 : 0.0;
  }
  return f;
}

std::vector<Vec> DecoupledRgnn::predict(const SimulationBundle& b,
                                        const std::vector<int>& record_steps) const {
  if (record_steps.empty()) return {};
  GraphTopology topo = b.mesh.graph();
  double domain_w =
      b.mesh.coords_mm[static_cast<std::size_t>(b.mesh.grid_cols)].x() - b.mesh.coords_mm[0].x();

  std::vector<Vec> out;
  std::size_t total = record_steps.size();
  for (std::size_t at = 0; at < total; at += static_cast<std::size_t>(cfg_.window)) {
    // windows tile the sequence; a short tail is padded by repeating the last
    // step and truncated on output
    std::vector<int> window_steps;
    for (int k = 0; k < cfg_.window; ++k) {
      std::size_t idx = std::min(at + static_cast<std::size_t>(k), total - 1);
      window_steps.push_back(record_steps[idx]);
    }
    Tape t;
    std::vector<Var> embeddings;
    for (int s : window_steps) {
      Var feats = t.constant(step_features(b, s, domain_w));
      embeddings.push_back(spatial_encode(t, topo, feats));
    }
    std::vector<Var> preds = temporal_decode(t, embeddings);
    std::size_t emit = std::min(static_cast<std::size_t>(cfg_.window), total - at);
    for (std::size_t k = 0; k < emit; ++k) {
      const Mat& p = t.value(preds[k]);
      int s = record_steps[at + k];
      Vec temps(p.rows());
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        bool active = b.active[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)] != 0;
        temps(i) = active ? denormalize_temp(p(i, 0)) : 0.0;
      }
      out.push_back(std::move(temps));
    }
  }
  return out;
}

}  // namespace thermesh::nn
