#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thermesh/baseline.hpp"
#include "thermesh/bundle.hpp"
#include "thermesh/material.hpp"
#include "thermesh/metrics.hpp"
#include "thermesh/multiscale.hpp"
#include "thermesh/sampling.hpp"
#include "thermesh/solver.hpp"
#include "thermesh/trainer.hpp"

namespace thermesh::pipeline {

/// Fully resolved pipeline configuration. A scale preset ("desk" or "paper")
/// supplies every default; a JSON config file overrides individual keys.
struct PipelineConfig {
  std::string scale = "desk";
  std::uint64_t seed = 7;

  std::string dataset_dir = "dataset";
  std::string checkpoint_dir = "checkpoints";
  std::string out_dir = "out";
  int generate_count = 12;
  int workers = 4;

  double part_height_mm = 8.0;
  int layers = 8;
  DesignBox design_box;
  MeshConfig mesh;
  ProcessConfig process;
  SolverConfig solver;
  MaterialTables tables;
  int hierarchy_depth = 3;

  nn::VgaeConfig vgae;
  nn::LatentRgnnConfig interlayer;
  nn::LatentRgnnConfig intralayer;
  nn::BaselineConfig baseline;

  train::TrainConfig train_vgae;
  train::TrainConfig train_interlayer;
  train::TrainConfig train_intralayer;
  train::TrainConfig train_baseline;

  int rollout_subsample = 7;

  static PipelineConfig preset(const std::string& scale);
  /// Loads the preset named by the file's "scale" (or the override), then
  /// applies the file's keys on top.
  static PipelineConfig load(const std::string& config_path, const std::string& scale_override,
                             std::optional<std::uint64_t> seed_override);

  std::string vgae_checkpoint() const { return checkpoint_dir + "/vgae.ckpt"; }
  std::string stage_checkpoint(const std::string& stage) const {
    return checkpoint_dir + "/" + stage + ".ckpt";
  }
};

/// Dataset index entry; the index file lives at <dataset_dir>/index.json.
struct DatasetEntry {
  std::string id;
  std::string file;
  std::string status;  // ok | failed
  std::string split;   // train | val | test
  std::string error;
};

struct DatasetIndex {
  std::uint64_t seed = 0;
  std::vector<DatasetEntry> entries;

  std::vector<std::string> ids_of_split(const std::string& split) const;
  static DatasetIndex load(const std::string& dataset_dir);
  void save(const std::string& dataset_dir) const;
};

/// Generates the dataset (parallel across simulations, resumable). Returns
/// the number of failed simulations.
int cmd_generate(const PipelineConfig& cfg);

/// Trains one stage; writes checkpoint + history CSV. Stages: vgae,
/// interlayer, intralayer, baseline. Throws ValidationError when a
/// prerequisite checkpoint is missing.
void cmd_train(const PipelineConfig& cfg, const std::string& stage);

/// Rolls out a trained model over the given bundle ids (default: test split);
/// writes prediction archives and logs the timing protocol.
void cmd_rollout(const PipelineConfig& cfg, const std::string& model,
                 const std::vector<std::string>& ids, bool serial);

/// Evaluates prediction archives against ground truth; writes the metric
/// report JSON, the t-MAE CSV and plot.
void cmd_evaluate(const PipelineConfig& cfg, const std::string& pred_dir,
                  const std::string& truth_dir, const std::string& model_name);

/// Prints a text summary of one bundle and optionally renders snapshots.
void cmd_inspect(const std::string& bundle_path, const std::vector<int>& snapshot_steps,
                 const std::string& out_dir, std::string* summary_out = nullptr);

// ----- stage internals, exposed for tests -----

struct LoadedDataset {
  std::vector<SimulationBundle> bundles;
  std::vector<MeshHierarchy> hierarchies;
  std::vector<std::string> splits;  // aligned with bundles
  std::vector<std::string> ids;

  std::vector<int> indices_of(const std::string& split) const;
};

LoadedDataset load_dataset(const PipelineConfig& cfg);

struct StageResult {
  double best_val_loss = 0.0;
  int epochs_run = 0;
  std::string checkpoint;
};

StageResult train_vgae_stage(const PipelineConfig& cfg, const LoadedDataset& data,
                             int latent_dim_override = 0, const std::string& tag = "vgae");
StageResult train_interlayer_stage(const PipelineConfig& cfg, const LoadedDataset& data);
StageResult train_intralayer_stage(const PipelineConfig& cfg, const LoadedDataset& data);
StageResult train_baseline_stage(const PipelineConfig& cfg, const LoadedDataset& data);

/// Builds the multiscale model wrappers from checkpoints for prediction.
struct LoadedLmRgnn {
  ad::ParamRegistry registry;
  nn::Vgae vgae;
  nn::LatentRgnn interlayer;
  nn::LatentRgnn intralayer;
  nn::MultiscaleModels models;

  LoadedLmRgnn(const PipelineConfig& cfg);
  void load_checkpoints(const PipelineConfig& cfg);
};

}  // namespace thermesh::pipeline
