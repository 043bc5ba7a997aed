#include "thermesh/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace thermesh::train {

void TrainConfig::validate() const {
  if (tbptt_steps < 1) throw ValidationError("trainer: tbptt_steps must be >= 1");
  if (!(learning_rate > 0)) throw ValidationError("trainer: learning_rate must be positive");
  if (patience < 1) throw ValidationError("trainer: patience must be >= 1");
  if (subsample_rate < 1) throw ValidationError("trainer: subsample_rate must be >= 1");
}

SplitIndices split_dataset(int count, std::uint64_t seed) {
  if (count < 3) throw ValidationError("split_dataset: need at least 3 bundles");
  std::vector<int> ids(static_cast<std::size_t>(count));
  std::iota(ids.begin(), ids.end(), 0);
  RngStream rng(seed);
  rng.shuffle(ids);
  // 4:1:2 proportions; rounding favors train, then test
  int n_train = static_cast<int>(std::llround(count * 4.0 / 7.0));
  int n_val = std::max(1, static_cast<int>(std::llround(count * 1.0 / 7.0)));
  n_train = std::max(1, std::min(n_train, count - n_val - 1));
  SplitIndices s;
  for (int i = 0; i < count; ++i) {
    if (i < n_train) {
      s.train.push_back(ids[static_cast<std::size_t>(i)]);
    } else if (i < n_train + n_val) {
      s.val.push_back(ids[static_cast<std::size_t>(i)]);
    } else {
      s.test.push_back(ids[static_cast<std::size_t>(i)]);
    }
  }
  return s;
}

std::vector<int> subsample_indices(int length, int rate, const std::vector<int>& keep_always) {
  if (rate < 1) throw ValidationError("subsample: rate must be >= 1");
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(length), 0);
  for (int i = 0; i < length; i += rate) keep[static_cast<std::size_t>(i)] = 1;
  for (int k : keep_always) {
    if (k < 0 || k >= length) throw ValidationError("subsample: keep index out of range");
    keep[static_cast<std::size_t>(k)] = 1;
  }
  std::vector<int> out;
  for (int i = 0; i < length; ++i) {
    if (keep[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw ValidationError("lr_at: epoch must be >= 0");
  if (epoch < cfg.warmup_epochs) {
    double f = cfg.warmup_start_factor +
               (1.0 - cfg.warmup_start_factor) * epoch / static_cast<double>(cfg.warmup_epochs);
    return cfg.learning_rate * f;
  }
  int k = epoch - cfg.warmup_epochs;
  if (k >= cfg.cosine_t_max) return cfg.eta_min;
  double cosv = 0.5 * (1.0 + std::cos(kPi * k / static_cast<double>(cfg.cosine_t_max)));
  return cfg.eta_min + (cfg.learning_rate - cfg.eta_min) * cosv;
}

void AdamW::step(ParamRegistry& reg, double lr) {
  ++step_count_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (ad::Parameter* p : reg.all()) {
    if (!p->trainable) continue;
    Moments& mom = state_[p->name];
    if (mom.m1.size() == 0) {
      mom.m1 = Mat::Zero(p->value.rows(), p->value.cols());
      mom.m2 = Mat::Zero(p->value.rows(), p->value.cols());
    }
    mom.m1 = cfg_.beta1 * mom.m1 + (1.0 - cfg_.beta1) * p->grad;
    mom.m2 = cfg_.beta2 * mom.m2 + (1.0 - cfg_.beta2) * p->grad.cwiseProduct(p->grad);
    Mat m1hat = mom.m1 / bc1;
    Mat m2hat = mom.m2 / bc2;
    // decoupled weight decay
    p->value -= lr * cfg_.weight_decay * p->value;
    p->value -= lr * (m1hat.array() / (m2hat.array().sqrt() + cfg_.eps)).matrix();
  }
}

TbpttStats tbptt_run_sequence(SequenceTask& task, int tbptt_steps, ParamRegistry& reg,
                              AdamW* opt, double lr) {
  if (tbptt_steps < 1) throw ValidationError("tbptt: window must be >= 1");
  TbpttStats stats;
  Mat hidden = task.initial_hidden();
  int n = task.length();
  int at = 0;
  double loss_acc = 0.0;
  while (at < n) {
    int window = std::min(tbptt_steps, n - at);
    Tape tape;
    Var h = tape.constant(hidden);  // gradient boundary from the previous window
    Var window_loss;
    for (int k = 0; k < window; ++k) {
      auto [h_next, step_loss] = task.step(tape, at + k, h);
      h = h_next;
      window_loss = k == 0 ? step_loss : tape.add(window_loss, step_loss);
    }
    window_loss = tape.scale(window_loss, 1.0 / window);
    double lv = tape.value(window_loss)(0, 0);
    if (!std::isfinite(lv)) {
      throw ComputeError("tbptt: non-finite loss in window starting at step " + std::to_string(at));
    }
    reg.zero_grad();
    tape.backward(window_loss);
    if (opt != nullptr) opt->step(reg, lr);
    hidden = tape.value(h);
    loss_acc += lv;
    ++stats.windows;
    at += window;
  }
  stats.mean_loss = loss_acc / std::max(1, stats.windows);
  return stats;
}

double sequence_loss(SequenceTask& task) {
  Mat hidden = task.initial_hidden();
  int n = task.length();
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    Tape tape;
    auto [h_next, step_loss] = task.step(tape, k, tape.constant(hidden));
    hidden = tape.value(h_next);
    acc += tape.value(step_loss)(0, 0);
  }
  return acc / std::max(1, n);
}

bool EarlyStopper::observe(double val_loss, const ParamRegistry& reg) {
  if (val_loss < best_) {
    best_ = val_loss;
    since_best_ = 0;
    reg.save(path_);
    return false;
  }
  ++since_best_;
  return since_best_ >= patience_;
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ComputeError("cannot write history: " + path);
  out << "epoch,train_loss,val_loss,lr\n";
  for (const EpochRecord& r : history) {
    out.precision(17);
    out << r.epoch << "," << r.train_loss << "," << r.val_loss << "," << r.lr << "\n";
  }
}

}  // namespace thermesh::train
