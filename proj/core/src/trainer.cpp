// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include "colora/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "colora/autograd.hpp"
#include "colora/error.hpp"
#include "colora/init.hpp"
#include "colora/rng.hpp"

namespace colora {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (size_t r : rows) out.push_back(labels[r]);
  return out;
}

int pick_best_epoch(const std::vector<EpochStats>& epochs, bool use_val) {
  int best = 0;
  for (int e = 1; e < static_cast<int>(epochs.size()); ++e) {
    const double acc = use_val ? epochs[static_cast<size_t>(e)].val_acc : epochs[static_cast<size_t>(e)].test_acc;
    const double loss = use_val ? epochs[static_cast<size_t>(e)].val_loss : epochs[static_cast<size_t>(e)].test_loss;
    const double bacc = use_val ? epochs[static_cast<size_t>(best)].val_acc : epochs[static_cast<size_t>(best)].test_acc;
    const double bloss = use_val ? epochs[static_cast<size_t>(best)].val_loss : epochs[static_cast<size_t>(best)].test_loss;
    if (acc > bacc || (acc == bacc && loss < bloss)) best = e;
  }
  return best;
}

}  // namespace

Tensor batched_scores(const ModelGraph& g, const Tensor& images, int batch_size) {
  const int n = images.dim(0);
  std::vector<float> out;
  int classes = 0;
  for (int start = 0; start < n; start += batch_size) {
    const int stop = std::min(n, start + batch_size);
    std::vector<size_t> rows(static_cast<size_t>(stop - start));
    std::iota(rows.begin(), rows.end(), static_cast<size_t>(start));
    const Tensor logits = g.forward(take_rows(images, rows));
    classes = logits.dim(1);
    out.insert(out.end(), logits.data().begin(), logits.data().end());
  }
  return Tensor::from_data_unchecked({n, classes}, std::move(out));
}

std::pair<double, double> eval_loss_acc(const ModelGraph& g, const SplitData& split,
                                        int batch_size) {
  const Tensor logits = batched_scores(g, split.images, batch_size);
  const double loss = cross_entropy(logits, split.labels);
  const std::vector<int> preds = argmax_rows(logits);
  long correct = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == split.labels[i]) ++correct;
  }
  return {loss, static_cast<double>(correct) / static_cast<double>(preds.size())};
}

RunHistory train(ModelGraph& g, const DatasetSplits& data, const TrainConfig& cfg,
                 const TrainHooks& hooks) {
  if (cfg.epochs < 1) throw ValueError("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw ValueError("train: batch_size must be >= 1");
  if (cfg.merge_interval < 0 || cfg.merge_interval > cfg.epochs) {
    throw ValueError("train: merge_interval must be in [0, epochs]");
  }
  for (const auto* s : {&data.train, &data.val, &data.test}) {
    if (s->count() == 0) throw ValueError("train: empty split");
  }
  if (g.num_classes() != data.num_classes) {
    throw ValueError("train: model has " + std::to_string(g.num_classes()) +
                     " output classes but data has " + std::to_string(data.num_classes));
  }

  AdamOptimizer opt(cfg.adam);
  RunHistory history;
  const int n = data.train.count();
  std::vector<size_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    for (int start = 0; start < n; start += cfg.batch_size) {
      const int stop = std::min(n, start + cfg.batch_size);
      const std::vector<size_t> rows(order.begin() + start, order.begin() + stop);
      const Tensor batch = take_rows(data.train.images, rows);
      std::vector<int> labels = gather_labels(data.train.labels, rows);

      GradTape tape;
      const Var logits = g.forward_taped(tape, batch);
      const Var loss = softmax_cross_entropy(tape, logits, std::move(labels));
      const double loss_value = tape.scalar(loss);
      if (!std::isfinite(loss_value)) {
        throw NumericError("NaN loss at epoch " + std::to_string(epoch) + ", batch offset " +
                           std::to_string(start));
      }
      const auto grads = tape.backward(loss);
      auto params = g.params();
      opt.step(params, grads);
    }

    const bool merge_now = cfg.merge_interval > 0 && epoch % cfg.merge_interval == 0;
    if (merge_now) {
      if (hooks.before_merge) hooks.before_merge(g, epoch);
      for (Layer& layer : g.layers()) {
        if (auto* l = std::get_if<CoLoRALayer>(&layer.impl)) {
          merge(*l);
          reinit(*l, derive_seed(cfg.seed, "reinit." + layer.name, static_cast<uint64_t>(epoch)));
          opt.reset(layer.name + ".kp");
          opt.reset(layer.name + ".kd");
          opt.reset(layer.name + ".db");
        }
      }
    }
    const double secs = seconds_since(t0);

    EpochStats stats;
    std::tie(stats.train_loss, stats.train_acc) = eval_loss_acc(g, data.train, cfg.batch_size);
    std::tie(stats.val_loss, stats.val_acc) = eval_loss_acc(g, data.val, cfg.batch_size);
    std::tie(stats.test_loss, stats.test_acc) = eval_loss_acc(g, data.test, cfg.batch_size);
    stats.seconds = secs;
    history.epochs.push_back(stats);
  }

  history.best_test_epoch = pick_best_epoch(history.epochs, false);
  history.best_val_epoch = pick_best_epoch(history.epochs, true);
  return history;
}

namespace {

double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  if (values.empty()) return 0.0;
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const size_t lo = static_cast<size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

}  // namespace

MultiRunResult multirun(const ModelFactory& factory, const DatasetSplits& data,
                        const TrainConfig& cfg) {
  if (cfg.runs < 1) throw ValueError("multirun: runs must be >= 1");

  MultiRunResult result;
  result.runs.resize(static_cast<size_t>(cfg.runs));

  auto one_run = [&](int r) {
    RunOutcome& out = result.runs[static_cast<size_t>(r)];
    out.run_index = r;
    try {
      TrainConfig run_cfg = cfg;
      run_cfg.seed = derive_seed(cfg.seed, "run", static_cast<uint64_t>(r));
      ModelGraph g = factory(run_cfg.seed);
      out.history = train(g, data, run_cfg);
      out.final_model = std::move(g);
      out.ok = true;
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
  };

  if (cfg.parallel_runs && cfg.runs > 1) {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(cfg.runs));
    for (int r = 0; r < cfg.runs; ++r) threads.emplace_back(one_run, r);
    for (auto& t : threads) t.join();
  } else {
    for (int r = 0; r < cfg.runs; ++r) one_run(r);
  }

  // Aggregate over completed runs.
  std::vector<const RunHistory*> done;
  for (const RunOutcome& o : result.runs) {
    if (o.ok) done.push_back(&o.history);
  }
  result.aggregate = aggregate_histories(done);
  return result;
}

AggregateCurves aggregate_histories(const std::vector<const RunHistory*>& histories) {
  AggregateCurves out;
  out.completed_runs = static_cast<int>(histories.size());
  if (histories.empty()) return out;

  const int epochs = static_cast<int>(histories.front()->epochs.size());
  out.epochs = epochs;
  const std::vector<std::pair<std::string, double EpochStats::*>> series = {
      {"train_loss", &EpochStats::train_loss}, {"train_acc", &EpochStats::train_acc},
      {"val_loss", &EpochStats::val_loss},     {"val_acc", &EpochStats::val_acc},
      {"test_loss", &EpochStats::test_loss},   {"test_acc", &EpochStats::test_acc},
  };
  for (const auto& [name, member] : series) {
    SeriesAggregate agg;
    for (int e = 0; e < epochs; ++e) {
      std::vector<double> vals;
      vals.reserve(histories.size());
      for (const RunHistory* h : histories) vals.push_back(h->epochs[static_cast<size_t>(e)].*member);
      agg.median.push_back(quantile(vals, 0.5));
      agg.q25.push_back(quantile(vals, 0.25));
      agg.q75.push_back(quantile(vals, 0.75));
      agg.min.push_back(*std::min_element(vals.begin(), vals.end()));
      agg.max.push_back(*std::max_element(vals.begin(), vals.end()));
    }
    out.series.emplace(name, std::move(agg));
  }
  return out;
}

namespace {

void reinit_head(ModelGraph& g, uint64_t seed) {
  for (Layer& layer : g.layers()) {
    if (!layer.is_head) continue;
    if (auto* conv = std::get_if<ConvLayer>(&layer.impl)) {
      const int fan_in = conv->kernel.kh() * conv->kernel.kw() * conv->kernel.in_channels();
      const int fan_out = conv->kernel.kh() * conv->kernel.kw() * conv->kernel.out_channels();
      conv->kernel.weights = glorot_uniform(conv->kernel.weights.shape(), fan_in, fan_out,
                                            derive_seed(seed, "head." + layer.name));
      if (conv->kernel.bias) conv->kernel.bias->fill(0.0f);
    } else if (auto* dense = std::get_if<DenseLayer>(&layer.impl)) {
      dense->w = glorot_uniform(dense->w.shape(), dense->w.dim(1), dense->w.dim(0),
                                derive_seed(seed, "head." + layer.name));
      dense->b.fill(0.0f);
    }
  }
}

TransferArm run_arm(std::string name, ModelGraph g, const DatasetSplits& target,
                    TrainConfig cfg) {
  TransferArm arm;
  arm.name = std::move(name);
  const ParamReport params = count_params(g);
  arm.trainable = params.trainable_total;
  arm.total = params.total();
  arm.history = train(g, target, cfg);

  double secs = 0.0;
  for (const EpochStats& e : arm.history.epochs) secs += e.seconds;
  arm.mean_epoch_seconds = secs / static_cast<double>(arm.history.epochs.size());

  const Tensor scores = softmax_rows(batched_scores(g, target.test.images, cfg.batch_size));
  const EvalReport report = evaluate(scores, target.test.labels);
  arm.test_accuracy = report.cw.accuracy;
  arm.auc = macro_auc(report);
  return arm;
}

}  // namespace

TransferReport pretrain_transfer_protocol(const DatasetSplits& source,
                                          const DatasetSplits& target,
                                          const TransferConfig& cfg) {
  if (source.train.images.rank() != 4 || target.train.images.rank() != 4 ||
      source.train.images.dim(1) != target.train.images.dim(1) ||
      source.train.images.dim(2) != target.train.images.dim(2) ||
      source.train.images.dim(3) != target.train.images.dim(3)) {
    throw ShapeError("transfer protocol: source and target image shapes must match");
  }

  const std::vector<int> input_shape = {source.train.images.dim(1), source.train.images.dim(2),
                                        source.train.images.dim(3)};
  const uint64_t seed = cfg.train.seed;

  ModelGraph pretrained =
      build_tiny_vgg(input_shape, cfg.widths, cfg.head, derive_seed(seed, "pretrain-init"));
  TrainConfig pre_cfg = cfg.train;
  pre_cfg.epochs = cfg.pretrain_epochs;
  pre_cfg.merge_interval = 0;
  pre_cfg.seed = derive_seed(seed, "pretrain");

  TransferReport report;
  report.pretrain_history = train(pretrained, source, pre_cfg);

  // Same source weights and same fresh head for every arm.
  reinit_head(pretrained, derive_seed(seed, "target-head"));

  TrainConfig arm_cfg = cfg.train;
  arm_cfg.epochs = cfg.target_epochs;
  arm_cfg.merge_interval = 0;

  {
    ModelGraph g = pretrained;
    g.freeze_backbone();
    TrainConfig c = arm_cfg;
    c.seed = derive_seed(seed, "arm.head_only");
    report.arms.push_back(run_arm("head_only", std::move(g), target, c));
  }
  {
    ModelGraph g = pretrained;
    TrainConfig c = arm_cfg;
    c.seed = derive_seed(seed, "arm.full_ft");
    report.arms.push_back(run_arm("full_ft", std::move(g), target, c));
  }
  {
    ModelGraph g = inject_cnn_adapter(pretrained, conv_layer_names(pretrained),
                                      FreezePolicy::kFreezeBackbone, derive_seed(seed, "arm.adapter"));
    TrainConfig c = arm_cfg;
    c.seed = derive_seed(seed, "arm.cnn_adapter");
    report.arms.push_back(run_arm("cnn_adapter", std::move(g), target, c));
  }
  {
    ModelGraph g = inject_colora(pretrained, conv_layer_names(pretrained), cfg.order,
                                 FreezePolicy::kFreezeBackbone, derive_seed(seed, "arm.colora"));
    TrainConfig c = arm_cfg;
    c.seed = derive_seed(seed, "arm.colora");
    c.merge_interval = cfg.colora_merge_interval;
    report.arms.push_back(run_arm("colora", std::move(g), target, c));
  }
  return report;
}

void write_history_csv(const RunHistory& h, std::ostream& os) {
  os << "epoch,split,loss,accuracy\n";
  char buf[128];
  for (size_t e = 0; e < h.epochs.size(); ++e) {
    const EpochStats& s = h.epochs[e];
    std::snprintf(buf, sizeof(buf), "%zu,train,%.8f,%.8f\n", e + 1, s.train_loss, s.train_acc);
    os << buf;
    std::snprintf(buf, sizeof(buf), "%zu,val,%.8f,%.8f\n", e + 1, s.val_loss, s.val_acc);
    os << buf;
    std::snprintf(buf, sizeof(buf), "%zu,test,%.8f,%.8f\n", e + 1, s.test_loss, s.test_acc);
    os << buf;
  }
}

void write_timing_csv(const RunHistory& h, std::ostream& os) {
  os << "epoch,seconds\n";
  char buf[64];
  for (size_t e = 0; e < h.epochs.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f\n", e + 1, h.epochs[e].seconds);
    os << buf;
  }
}

void write_aggregate_csv(const AggregateCurves& agg, std::ostream& os) {
  os << "epoch,series,median,q25,q75,min,max\n";
  char buf[192];
  for (int e = 0; e < agg.epochs; ++e) {
    for (const auto& [name, s] : agg.series) {
      std::snprintf(buf, sizeof(buf), "%d,%s,%.8f,%.8f,%.8f,%.8f,%.8f\n", e + 1, name.c_str(),
                    s.median[static_cast<size_t>(e)], s.q25[static_cast<size_t>(e)],
                    s.q75[static_cast<size_t>(e)], s.min[static_cast<size_t>(e)],
                    s.max[static_cast<size_t>(e)]);
      os << buf;
    }
  }
}

void write_transfer_csv(const TransferReport& report, std::ostream& os) {
  os << "arm,test_accuracy,auc,trainable,total,trainable_fraction,mean_epoch_seconds\n";
  char buf[192];
  for (const TransferArm& arm : report.arms) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%ld,%ld,%.6f,%.6f\n", arm.name.c_str(),
                  arm.test_accuracy, arm.auc, arm.trainable, arm.total,
                  arm.total == 0 ? 0.0 : static_cast<double>(arm.trainable) / static_cast<double>(arm.total),
                  arm.mean_epoch_seconds);
    os << buf;
  }
}

}  // namespace colora
