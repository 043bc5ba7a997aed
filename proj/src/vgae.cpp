#include "thermesh/vgae.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace thermesh::nn {

using nlohmann::json;

HierarchyRef HierarchyRef::of(const MeshHierarchy& h) {
  HierarchyRef r;
  for (const auto& lvl : h.levels) r.topos.push_back(&lvl.topo);
  for (const auto& p : h.pools) r.pools.push_back(&p);
  for (const auto& u : h.unpools) r.unpools.push_back(&u);
  return r;
}

HierarchyRef BatchedHierarchy::ref() const {
  HierarchyRef r;
  for (const auto& t : level_topos) r.topos.push_back(&t);
  for (const auto& p : pools) r.pools.push_back(&p);
  for (const auto& u : unpools) r.unpools.push_back(&u);
  return r;
}

BatchedHierarchy batch_hierarchies(const std::vector<const MeshHierarchy*>& parts) {
  if (parts.empty()) throw ValidationError("batch_hierarchies: empty batch");
  int depth = parts[0]->depth();
  for (const MeshHierarchy* h : parts) {
    if (h->depth() != depth) throw ValidationError("batch_hierarchies: depth mismatch");
  }
  BatchedHierarchy out;
  for (int lvl = 0; lvl <= depth; ++lvl) {
    std::vector<const GraphTopology*> topos;
    for (const MeshHierarchy* h : parts) topos.push_back(&h->levels[static_cast<std::size_t>(lvl)].topo);
    BatchedTopology bt = batch_topologies(topos);
    out.level_topos.push_back(std::move(bt.merged));
    out.level_node_offset.push_back(std::move(bt.node_offset));
    out.level_node_sample.push_back(std::move(bt.node_sample));
  }
  for (int p = 0; p < depth; ++p) {
    PoolMap pm;
    UnpoolMap um;
    Eigen::Index pool_rows = 0, unpool_rows = 0;
    for (const MeshHierarchy* h : parts) {
      pool_rows += h->pools[static_cast<std::size_t>(p)].edge_feat.rows();
      unpool_rows += h->unpools[static_cast<std::size_t>(p)].edge_feat.rows();
    }
    pm.edge_feat.resize(pool_rows, 3);
    um.edge_feat.resize(unpool_rows, 3);
    Eigen::Index pat = 0, uat = 0;
    for (std::size_t s = 0; s < parts.size(); ++s) {
      const PoolMap& src = parts[s]->pools[static_cast<std::size_t>(p)];
      int fine_base = out.level_node_offset[static_cast<std::size_t>(p)][s];
      int coarse_base = out.level_node_offset[static_cast<std::size_t>(p) + 1][s];
      for (std::size_t k = 0; k < src.fine_src.size(); ++k) {
        pm.fine_src.push_back(src.fine_src[k] + fine_base);
        pm.coarse_dst.push_back(src.coarse_dst[k] + coarse_base);
      }
      pm.edge_feat.middleRows(pat, src.edge_feat.rows()) = src.edge_feat;
      pat += src.edge_feat.rows();
      const UnpoolMap& usrc = parts[s]->unpools[static_cast<std::size_t>(p)];
      for (std::size_t k = 0; k < usrc.coarse_src.size(); ++k) {
        um.coarse_src.push_back(usrc.coarse_src[k] + coarse_base);
      }
      um.edge_feat.middleRows(uat, usrc.edge_feat.rows()) = usrc.edge_feat;
      uat += usrc.edge_feat.rows();
    }
    out.pools.push_back(std::move(pm));
    out.unpools.push_back(std::move(um));
  }
  return out;
}

Var graph_pool(Tape& t, const PoolMap& map, int coarse_nodes, Var fine_feats, const Mlp& mlp) {
  if (map.fine_src.empty()) throw ComputeError("graph_pool: empty neighbor set (hierarchy defect)");
  Var gathered = t.gather_rows(fine_feats, map.fine_src);
  Var inp = t.concat_cols({t.constant(map.edge_feat), gathered});
  Var transformed = mlp.forward(t, inp);
  return t.scatter_sum(transformed, map.coarse_dst, coarse_nodes);
}

Var graph_unpool(Tape& t, const UnpoolMap& map, Var coarse_feats, const Mlp& mlp) {
  Var gathered = t.gather_rows(coarse_feats, map.coarse_src);
  Var inp = t.concat_cols({t.constant(map.edge_feat), gathered});
  return mlp.forward(t, inp);
}

void VgaeConfig::validate() const {
  if (depth < 1) throw ValidationError("vgae: depth must be >= 1");
  if (static_cast<int>(encoder_hidden.size()) != depth ||
      static_cast<int>(decoder_hidden.size()) != depth) {
    throw ValidationError("vgae: hidden size lists must have one entry per depth level");
  }
  if (latent_dim < 1) throw ValidationError("vgae: latent_dim must be >= 1");
}

Vgae Vgae::create(ParamRegistry& reg, RngStream& rng, const std::string& prefix, VgaeConfig cfg) {
  cfg.validate();
  Vgae v;
  v.cfg_ = cfg;
  v.prefix_ = prefix;
  auto mlp_sizes = [&](int in, int out) {
    std::vector<int> sizes{in};
    for (int l = 1; l < cfg.pool_layers; ++l) sizes.push_back(cfg.pool_hidden);
    sizes.push_back(out);
    return sizes;
  };
  int ch = cfg.input_channels;
  for (int p = 0; p < cfg.depth; ++p) {
    int out = cfg.encoder_hidden[static_cast<std::size_t>(p)];
    MlpSpec ps{mlp_sizes(3 + ch, out), Activation::Silu, true};
    v.pool_mlps_.push_back(Mlp::create(reg, rng, prefix + ".enc" + std::to_string(p) + ".pool", ps));
    v.enc_gats_.push_back(GatConv::create(reg, rng, prefix + ".enc" + std::to_string(p) + ".gat",
                                          GatConvSpec{out, 3, out, 0.2}));
    ch = out;
  }
  Parameter& mw = reg.create(prefix + ".mu.w", ch, cfg.latent_dim);
  init_uniform_fanin(mw, rng);
  Parameter& mb = reg.create(prefix + ".mu.b", 1, cfg.latent_dim);
  Parameter& lw = reg.create(prefix + ".logstd.w", ch, cfg.latent_dim);
  init_uniform_fanin(lw, rng);
  Parameter& lb = reg.create(prefix + ".logstd.b", 1, cfg.latent_dim);
  v.mu_w_ = &mw;
  v.mu_b_ = &mb;
  v.ls_w_ = &lw;
  v.ls_b_ = &lb;

  ch = cfg.latent_dim;
  for (int k = 0; k < cfg.depth; ++k) {
    int out = cfg.decoder_hidden[static_cast<std::size_t>(k)];
    MlpSpec us{mlp_sizes(3 + ch, out), Activation::Silu, true};
    v.unpool_mlps_.push_back(
        Mlp::create(reg, rng, prefix + ".dec" + std::to_string(k) + ".unpool", us));
    v.dec_gats_.push_back(GatConv::create(reg, rng, prefix + ".dec" + std::to_string(k) + ".gat",
                                          GatConvSpec{out, 3, out, 0.2}));
    ch = out;
  }
  Parameter& ow = reg.create(prefix + ".out.w", ch, 1);
  init_uniform_fanin(ow, rng);
  Parameter& ob = reg.create(prefix + ".out.b", 1, 1);
  v.out_w_ = &ow;
  v.out_b_ = &ob;
  return v;
}

LatentVars Vgae::encode(Tape& t, const HierarchyRef& h, Var x0) const {
  if (h.depth() != cfg_.depth) {
    throw ValidationError("vgae: hierarchy depth " + std::to_string(h.depth()) +
                          " does not match config depth " + std::to_string(cfg_.depth));
  }
  if (t.value(x0).cols() != cfg_.input_channels) {
    throw ValidationError("vgae: encoder input channel mismatch");
  }
  Var x = x0;
  for (int p = 0; p < cfg_.depth; ++p) {
    const GraphTopology& coarse = *h.topos[static_cast<std::size_t>(p) + 1];
    x = graph_pool(t, *h.pools[static_cast<std::size_t>(p)], coarse.num_nodes, x,
                   pool_mlps_[static_cast<std::size_t>(p)]);
    x = enc_gats_[static_cast<std::size_t>(p)].forward(t, coarse, x, t.constant(coarse.edge_feat));
  }
  LatentVars lv;
  lv.mean = t.add_row(t.matmul(x, t.param(*mu_w_)), t.param(*mu_b_));
  lv.logstd = t.add_row(t.matmul(x, t.param(*ls_w_)), t.param(*ls_b_));
  return lv;
}

Var Vgae::decode(Tape& t, const HierarchyRef& h, Var z) const {
  if (t.value(z).cols() != cfg_.latent_dim) {
    throw ValidationError("vgae: latent dim mismatch in decode");
  }
  Var x = z;
  for (int k = 0; k < cfg_.depth; ++k) {
    int level = cfg_.depth - 1 - k;  // produce features on this level
    const GraphTopology& fine = *h.topos[static_cast<std::size_t>(level)];
    x = graph_unpool(t, *h.unpools[static_cast<std::size_t>(level)], x,
                     unpool_mlps_[static_cast<std::size_t>(k)]);
    x = dec_gats_[static_cast<std::size_t>(k)].forward(t, fine, x, t.constant(fine.edge_feat));
  }
  return t.add_row(t.matmul(x, t.param(*out_w_)), t.param(*out_b_));
}

Mat Vgae::encoder_input(const Vec& temps_c, const Vec& active, const Vec& material) {
  Mat x(temps_c.size(), 3);
  for (Eigen::Index i = 0; i < temps_c.size(); ++i) {
    x(i, 0) = active(i) != 0.0 ? normalize_temp(temps_c(i)) : 0.0;
    x(i, 1) = active(i);
    x(i, 2) = material(i);
  }
  return x;
}

Vec Vgae::reconstruct_c(const MeshHierarchy& h, const Vec& temps_c, const Vec& active,
                        const Vec& material) const {
  Tape t;
  HierarchyRef hr = HierarchyRef::of(h);
  Var x0 = t.constant(encoder_input(temps_c, active, material));
  LatentVars lv = encode(t, hr, x0);
  Var recon = decode(t, hr, t.detach(lv.mean));
  const Mat& r = t.value(recon);
  Vec out(r.rows());
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    out(i) = active(i) != 0.0 ? denormalize_temp(r(i, 0)) : 0.0;
  }
  return out;
}

Mat reparameterize(const Mat& mean, const Mat& std, RngStream& rng, bool sample) {
  if (!sample) return mean;
  if (mean.rows() != std.rows() || mean.cols() != std.cols()) {
    throw ValidationError("reparameterize: mean/std shape mismatch");
  }
  Mat z = mean;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) += std(i, j) * rng.normal();
  }
  return z;
}

VgaeLossParts vgae_loss(Tape& t, Var recon_norm, const Mat& target_norm, const Vec& mask,
                        const std::vector<int>& node_sample, int num_samples,
                        const LatentVars& latent, const std::vector<int>& latent_sample,
                        double beta, bool normalize_kl) {
  VgaeLossParts parts;
  parts.recon = masked_mse(t, recon_norm, target_norm, mask, node_sample, num_samples);

  // per latent node and channel: 1 + log sigma^2 - mu^2 - sigma^2
  const Eigen::Index ld = t.value(latent.mean).cols();
  Var log_var = t.scale(latent.logstd, 2.0);
  Var var = t.exp(log_var);
  Var mu_sq = t.square(latent.mean);
  Var ones = t.constant(Mat::Ones(t.value(latent.mean).rows(), ld));
  Var term = t.sub(t.sub(t.add(ones, log_var), mu_sq), var);
  Var per_sample = t.scatter_sum(term, latent_sample, num_samples);
  Var collapsed = t.matmul(per_sample, t.constant(Mat::Ones(ld, 1)));
  if (normalize_kl) {
    Vec counts = Vec::Zero(num_samples);
    for (int s : latent_sample) counts(s) += 1.0;
    collapsed = t.row_scale(collapsed, counts.cwiseInverse());
  }
  parts.kl = t.scale(t.sum(collapsed), -0.5 / num_samples);
  parts.total = t.add(parts.recon, t.scale(parts.kl, beta));
  return parts;
}

namespace {
constexpr char kLatentMagic[8] = {'T', 'H', 'L', 'A', 'T', 'N', '1', '\n'};
}

void write_latent_bundle(const LatentBundle& lb, const std::string& path) {
  if (lb.step_indices.size() != lb.means.size()) {
    throw ValidationError("latent bundle: index/field count mismatch");
  }
  json manifest;
  manifest["format"] = 1;
  manifest["sim_id"] = lb.sim_id;
  manifest["steps"] = lb.step_indices;
  if (!lb.means.empty()) {
    manifest["nodes"] = lb.means[0].rows();
    manifest["latent_dim"] = lb.means[0].cols();
  } else {
    manifest["nodes"] = 0;
    manifest["latent_dim"] = 0;
  }
  std::string mtxt = manifest.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ComputeError("cannot open latent bundle for writing: " + path);
  out.write(kLatentMagic, sizeof(kLatentMagic));
  std::uint64_t mlen = mtxt.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  out.write(mtxt.data(), static_cast<std::streamsize>(mtxt.size()));
  for (const Mat& m : lb.means) {
    std::vector<float> buf(static_cast<std::size_t>(m.size()));
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) buf[k++] = static_cast<float>(m(r, c));
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
}

LatentBundle read_latent_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ComputeError("cannot open latent bundle: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kLatentMagic, sizeof(kLatentMagic)) != 0) {
    throw ComputeError("latent bundle: bad magic in " + path);
  }
  std::uint64_t mlen = 0;
  in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  std::string mtxt(mlen, '\0');
  in.read(mtxt.data(), static_cast<std::streamsize>(mlen));
  json manifest = json::parse(mtxt);
  LatentBundle lb;
  lb.sim_id = manifest.at("sim_id").get<std::string>();
  lb.step_indices = manifest.at("steps").get<std::vector<int>>();
  Eigen::Index nodes = manifest.at("nodes").get<Eigen::Index>();
  Eigen::Index ld = manifest.at("latent_dim").get<Eigen::Index>();
  for (std::size_t s = 0; s < lb.step_indices.size(); ++s) {
    std::vector<float> buf(static_cast<std::size_t>(nodes * ld));
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw ComputeError("latent bundle: truncated payload in " + path);
    Mat m(nodes, ld);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < nodes; ++r) {
      for (Eigen::Index c = 0; c < ld; ++c) m(r, c) = static_cast<double>(buf[k++]);
    }
    lb.means.push_back(std::move(m));
  }
  return lb;
}

double memory_reduction_factor(std::size_t bundle_bytes, std::size_t latent_bytes) {
  if (bundle_bytes == 0) throw ValidationError("memory_reduction_factor: empty bundle");
  return static_cast<double>(latent_bytes) / static_cast<double>(bundle_bytes);
}

}  // namespace thermesh::nn
