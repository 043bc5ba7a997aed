#pragma once

#include <string>
#include <vector>

#include "thermesh/hierarchy.hpp"
#include "thermesh/nn.hpp"

namespace thermesh::nn {

/// Uniform view over a single-mesh hierarchy or a batched one, so the
/// encoder/decoder code paths are identical.
struct HierarchyRef {
  std::vector<const GraphTopology*> topos;  // depth + 1 levels
  std::vector<const PoolMap*> pools;
  std::vector<const UnpoolMap*> unpools;

  int depth() const { return static_cast<int>(pools.size()); }
  static HierarchyRef of(const MeshHierarchy& h);
};

/// Disjoint union of several mesh hierarchies (all of equal depth) for
/// minibatched encoding/decoding.
struct BatchedHierarchy {
  std::vector<GraphTopology> level_topos;
  std::vector<PoolMap> pools;
  std::vector<UnpoolMap> unpools;
  std::vector<std::vector<int>> level_node_offset;  // [level][sample+1]
  std::vector<std::vector<int>> level_node_sample;  // [level][node]

  HierarchyRef ref() const;
};

BatchedHierarchy batch_hierarchies(const std::vector<const MeshHierarchy*>& parts);

/// Pooled node feature: each coarse node sums an MLP of (edge-feature |
/// fine-neighbor feature) over its fine-neighbor set; the MLP input passes
/// through LayerNorm.
Var graph_pool(Tape& t, const PoolMap& map, int coarse_nodes, Var fine_feats, const Mlp& mlp);

/// Unpooled node feature: each fine node reads its nearest coarse node
/// through an MLP of (edge-feature | coarse feature).
Var graph_unpool(Tape& t, const UnpoolMap& map, Var coarse_feats, const Mlp& mlp);

struct VgaeConfig {
  int depth = 3;
  int latent_dim = 16;
  std::vector<int> encoder_hidden = {12, 24, 32};
  std::vector<int> decoder_hidden = {32, 24, 12};
  int pool_hidden = 32;
  int pool_layers = 2;  // affine layers in pool/unpool MLPs
  int input_channels = 3;  // temperature, active mask, material mask
  double beta = 100.0;
  bool normalize_kl = false;

  void validate() const;
};

/// Node-wise latent distribution on the deepest hierarchy level.
struct LatentVars {
  Var mean;
  Var logstd;
};

struct LatentField {
  Mat mean;
  Mat std;
};

class Vgae {
public:
  static Vgae create(ParamRegistry& reg, RngStream& rng, const std::string& prefix,
                     VgaeConfig cfg);

  /// x0: [n0 x input_channels] rows (normalized temperature, active, material).
  LatentVars encode(Tape& t, const HierarchyRef& h, Var x0) const;
  /// z: [nd x latent_dim] -> reconstructed normalized temperature [n0 x 1].
  Var decode(Tape& t, const HierarchyRef& h, Var z) const;

  /// Convenience single-field eval: encode, take the mean, decode; returns
  /// temperatures in degC (zero on inactive nodes).
  Vec reconstruct_c(const MeshHierarchy& h, const Vec& temps_c, const Vec& active,
                    const Vec& material) const;

  /// Builds the standard [T_norm | m | mu] encoder input.
  static Mat encoder_input(const Vec& temps_c, const Vec& active, const Vec& material);

  const VgaeConfig& config() const { return cfg_; }
  const std::string& prefix() const { return prefix_; }

private:
  VgaeConfig cfg_;
  std::string prefix_;
  std::vector<Mlp> pool_mlps_;
  std::vector<GatConv> enc_gats_;
  std::vector<Mlp> unpool_mlps_;
  std::vector<GatConv> dec_gats_;
  Parameter* mu_w_ = nullptr;
  Parameter* mu_b_ = nullptr;
  Parameter* ls_w_ = nullptr;
  Parameter* ls_b_ = nullptr;
  Parameter* out_w_ = nullptr;
  Parameter* out_b_ = nullptr;
};

/// z = mean + std * eps with seeded standard-normal eps; pass sample=false
/// for the deterministic evaluation mode (returns the mean).
Mat reparameterize(const Mat& mean, const Mat& std, RngStream& rng, bool sample = true);

struct VgaeLossParts {
  Var total;
  Var recon;
  Var kl;
};

/// recon_norm/target_norm are normalized temperatures on the top level; the
/// KL term sums over latent-mesh nodes per sample without node normalization
/// (a toggle enables 1/|V_d| normalization for study).
VgaeLossParts vgae_loss(Tape& t, Var recon_norm, const Mat& target_norm, const Vec& mask,
                        const std::vector<int>& node_sample, int num_samples,
                        const LatentVars& latent, const std::vector<int>& latent_sample,
                        double beta, bool normalize_kl);

/// Latent bundle archive: float32 latent fields keyed by simulation id and
/// step index, plus a manifest.
struct LatentBundle {
  std::string sim_id;
  std::vector<int> step_indices;
  std::vector<Mat> means;  // [steps][nd x latent]
};

void write_latent_bundle(const LatentBundle& lb, const std::string& path);
LatentBundle read_latent_bundle(const std::string& path);

/// Ratio between the storage of the raw simulation data and its compressed
/// latent counterpart.
double memory_reduction_factor(std::size_t bundle_bytes, std::size_t latent_bytes);

}  // namespace thermesh::nn
