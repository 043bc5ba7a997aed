#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "thermesh/params.hpp"
#include "thermesh/tape.hpp"

namespace thermesh::train {

using ad::ParamRegistry;
using ad::Tape;
using ad::Var;

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 8;
  int tbptt_steps = 8;
  double warmup_start_factor = 0.1;
  int warmup_epochs = 8;
  int cosine_t_max = 130;
  double eta_min = 1e-4;
  int patience = 25;
  int max_epochs = 200;
  int subsample_rate = 7;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitIndices {
  std::vector<int> train, val, test;
};

/// Deterministic 4:1:2 split by shuffled index.
SplitIndices split_dataset(int count, std::uint64_t seed);

/// Keeps every rate-th element (always index 0); with keep set, the listed
/// indices (layer terminals) are always retained.
std::vector<int> subsample_indices(int length, int rate, const std::vector<int>& keep_always);

/// Linear warmup from warmup_start_factor * lr over warmup_epochs, then
/// cosine annealing from lr to eta_min over cosine_t_max epochs.
double lr_at(int epoch, const TrainConfig& cfg);

/// Adaptive-moment optimizer with decoupled weight decay.
struct AdamWConfig {
  double beta1 = 0.95;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

class AdamW {
public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  /// Applies one update from the accumulated gradients of every trainable
  /// parameter, then leaves gradients untouched (caller zeroes them).
  void step(ParamRegistry& reg, double lr);

  const AdamWConfig& config() const { return cfg_; }

private:
  struct Moments {
    Mat m1, m2;
  };
  AdamWConfig cfg_;
  std::map<std::string, Moments> state_;
  long step_count_ = 0;
};

/// One recurrent training sequence: the task owns the data; the trainer owns
/// windowing, detaching and optimizer calls.
class SequenceTask {
public:
  virtual ~SequenceTask() = default;
  virtual int length() const = 0;
  virtual Mat initial_hidden() = 0;
  /// Builds step t on the tape; returns the new hidden and this step's loss.
  virtual std::pair<Var, Var> step(Tape& t, int step_index, Var hidden) = 0;
};

struct TbpttStats {
  double mean_loss = 0.0;
  int windows = 0;
};

/// Runs one sequence with truncated backpropagation: the forward pass is
/// sequential; every tbptt_steps steps the window loss is backpropagated, the
/// optimizer steps, and the hidden state crosses into the next window as a
/// constant (the gradient boundary). tbptt_steps >= length degenerates to
/// full backpropagation through time.
TbpttStats tbptt_run_sequence(SequenceTask& task, int tbptt_steps, ParamRegistry& reg,
                              AdamW* opt, double lr);

/// Evaluation pass: mean per-step loss without gradient updates.
double sequence_loss(SequenceTask& task);

/// Early stopping on validation loss; keeps the best checkpoint on disk.
class EarlyStopper {
public:
  EarlyStopper(int patience, std::string checkpoint_path)
      : patience_(patience), path_(std::move(checkpoint_path)) {}

  /// Returns true when training should stop.
  bool observe(double val_loss, const ParamRegistry& reg);
  double best() const { return best_; }
  const std::string& checkpoint_path() const { return path_; }

private:
  int patience_;
  std::string path_;
  double best_ = std::numeric_limits<double>::infinity();
  int since_best_ = 0;
};

struct EpochRecord {
  int epoch;
  double train_loss;
  double val_loss;
  double lr;
};

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path);

}  // namespace thermesh::train
