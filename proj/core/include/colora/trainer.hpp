// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "colora/adam.hpp"
#include "colora/data.hpp"
#include "colora/metrics.hpp"
#include "colora/model.hpp"

namespace colora {

struct TrainConfig {
  int epochs = 5;
  int batch_size = 32;
  AdamConfig adam;
  int merge_interval = 0;  // merge every k epochs; 0 = never
  uint64_t seed = 0;
  int runs = 1;
  bool parallel_runs = false;
};

struct EpochStats {
  double train_loss = 0.0, train_acc = 0.0;
  double val_loss = 0.0, val_acc = 0.0;
  double test_loss = 0.0, test_acc = 0.0;
  double seconds = 0.0;  // batch loop plus merge, excluding evaluation
};

struct RunHistory {
  std::vector<EpochStats> epochs;
  int best_test_epoch = 0;  // 0-based; best test accuracy, ties to lower loss
  int best_val_epoch = 0;   // same rule on the validation split
};

struct TrainHooks {
  /// Called with the 1-based epoch right before CoLoRA layers are merged.
  std::function<void(ModelGraph&, int)> before_merge;
};

/// One training run: seeded shuffled mini-batches, softmax cross-entropy,
/// Adam on unfrozen parameters. On merge epochs every CoLoRA layer is merged
/// and reinitialized (fresh seed per layer and epoch) and its Adam state
/// dropped; evaluation happens after the merge so logged metrics reflect the
/// merged model. Throws NumericError on NaN loss/gradient, ValueError on
/// empty splits or a class-count mismatch.
RunHistory train(ModelGraph& g, const DatasetSplits& data, const TrainConfig& cfg,
                 const TrainHooks& hooks = {});

/// Builds the model for one run from the run seed (the multi-run protocol
/// re-draws initial weights per run).
using ModelFactory = std::function<ModelGraph(uint64_t seed)>;

struct RunOutcome {
  int run_index = 0;
  bool ok = false;
  RunHistory history;
  ModelGraph final_model;
  std::string error;
};

struct SeriesAggregate {
  std::vector<double> median, q25, q75, min, max;  // one value per epoch
};

struct AggregateCurves {
  std::map<std::string, SeriesAggregate> series;
  int epochs = 0;
  int completed_runs = 0;
};

struct MultiRunResult {
  std::vector<RunOutcome> runs;
  AggregateCurves aggregate;
};

/// Per-epoch median, quartiles and range of each loss/accuracy series.
/// Quantiles use linear interpolation between order statistics.
AggregateCurves aggregate_histories(const std::vector<const RunHistory*>& histories);

/// cfg.runs independent runs with per-run seeds derived from cfg.seed and the
/// run index. Failures are captured per run; aggregation (median, quartiles,
/// range per epoch) covers completed runs. Runs execute in parallel when
/// cfg.parallel_runs is set; results are identical either way.
MultiRunResult multirun(const ModelFactory& factory, const DatasetSplits& data,
                        const TrainConfig& cfg);

/// Logits for every row of `images`, computed in batches.
Tensor batched_scores(const ModelGraph& g, const Tensor& images, int batch_size = 64);

/// Mean cross-entropy and accuracy of the model on a split.
std::pair<double, double> eval_loss_acc(const ModelGraph& g, const SplitData& split,
                                        int batch_size = 64);

// ---- Source -> target transfer comparison ------------------------------------

struct TransferArm {
  std::string name;
  double test_accuracy = 0.0;  // final-model evaluation on the target test set
  double auc = 0.0;            // macro one-vs-rest AUC of the final model
  long trainable = 0;
  long total = 0;
  double mean_epoch_seconds = 0.0;
  RunHistory history;
};

struct TransferConfig {
  std::vector<int> widths = {16, 32};
  HeadSpec head{16, 16, 4};
  int pretrain_epochs = 5;
  int target_epochs = 8;
  TrainConfig train;               // lr, batch size, base seed
  int colora_merge_interval = 1;
  ResidualOrder order = ResidualOrder::kPwThenDw;
};

struct TransferReport {
  RunHistory pretrain_history;
  std::vector<TransferArm> arms;  // head_only, full_ft, cnn_adapter, colora
};

/// Pretrains a backbone on the source task, then adapts it to the target task
/// four ways from the same weights (with an identically re-initialized head):
/// head-only, full fine-tuning, CNN adapters, and CoLoRA with the epoch-wise
/// merge schedule.
TransferReport pretrain_transfer_protocol(const DatasetSplits& source,
                                          const DatasetSplits& target,
                                          const TransferConfig& cfg);

// ---- CSV emission -------------------------------------------------------------

/// epoch,split,loss,accuracy rows; deterministic bytes for a fixed history.
void write_history_csv(const RunHistory& h, std::ostream& os);

/// Wall-clock seconds per epoch; split out of the history CSV because timing
/// is not reproducible byte-for-byte.
void write_timing_csv(const RunHistory& h, std::ostream& os);

void write_aggregate_csv(const AggregateCurves& agg, std::ostream& os);

void write_transfer_csv(const TransferReport& report, std::ostream& os);

}  // namespace colora
