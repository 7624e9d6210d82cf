// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: train / eval / distill / params / merge-check plus
// a synthetic-data generator. Exit codes: 0 success, 1 numeric failure,
// 2 input or config error, 3 output I/O error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "colora/checkpoint.hpp"
#include "colora/config.hpp"
#include "colora/data.hpp"
#include "colora/error.hpp"
#include "colora/metrics.hpp"
#include "colora/model.hpp"
#include "colora/rng.hpp"
#include "colora/svg.hpp"
#include "colora/trainer.hpp"

namespace fs = std::filesystem;
using namespace colora;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitInput = 2;
constexpr int kExitIo = 3;

uint64_t hash_file(const fs::path& path, uint64_t h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValueError("cannot read: " + path.string());
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a(buf, static_cast<size_t>(in.gcount()), h);
  }
  return h;
}

std::string hex64(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- config-driven construction ----------------------------------------------

DatasetSplits load_data_from_config(const Config& cfg, int expected_classes,
                                    std::string* data_hash) {
  if (cfg.has("data.dir")) {
    const std::string dir = cfg.require("data.dir");
    if (!fs::is_directory(dir)) throw ValueError("dataset directory not found: " + dir);
    uint64_t h = 0xcbf29ce484222325ULL;
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().string());
    std::sort(names.begin(), names.end());
    for (const std::string& n : names) h = hash_file(n, fnv1a(n, h));
    if (data_hash) *data_hash = hex64(h);
    return load_dataset(dir, expected_classes);
  }
  if (cfg.has("data.synthetic")) {
    SyntheticSpec spec;
    spec.kind = cfg.require("data.synthetic");
    spec.train_per_class = cfg.get_int("data.per_class", 64);
    spec.val_per_class = cfg.get_int("data.val_per_class", 16);
    spec.test_per_class = cfg.get_int("data.test_per_class", 16);
    spec.height = cfg.get_int("data.hw", 16);
    spec.width = spec.height;
    spec.noise = cfg.get_double("data.noise", 0.15);
    spec.shift = cfg.get_double("data.shift", 0.0);
    spec.seed = cfg.get_u64("data.seed", 7);
    if (data_hash) {
      std::string tag = spec.kind + "/" + std::to_string(spec.train_per_class) + "/" +
                        std::to_string(spec.val_per_class) + "/" +
                        std::to_string(spec.test_per_class) + "/" + std::to_string(spec.height) +
                        "/" + std::to_string(spec.noise) + "/" + std::to_string(spec.shift) + "/" +
                        std::to_string(spec.seed);
      *data_hash = hex64(fnv1a(tag));
    }
    return make_synthetic(spec);
  }
  throw ValueError("config: set data.dir or data.synthetic");
}

ResidualOrder order_from_config(const Config& cfg) {
  const std::string order = cfg.get("colora.order", "pw_dw");
  if (order == "pw_dw") return ResidualOrder::kPwThenDw;
  if (order == "dw_pw") return ResidualOrder::kDwThenPw;
  throw ValueError("config: colora.order must be pw_dw or dw_pw, got " + order);
}

ModelGraph build_model_from_config(const Config& cfg, uint64_t seed) {
  const std::vector<int> input = cfg.get_int_list("arch.input", {16, 16, 1});
  const std::vector<int> widths = cfg.get_int_list("arch.widths", {16, 32});
  const std::vector<int> head = cfg.get_int_list("arch.head", {16, 16, 4});
  if (input.size() != 3) throw ValueError("config: arch.input must be H,W,C");
  if (head.size() != 3) throw ValueError("config: arch.head must be reduce,hidden,classes");
  ModelGraph g = build_tiny_vgg(input, widths, HeadSpec{head[0], head[1], head[2]}, seed,
                                cfg.get_bool("arch.conv_bias", true));

  const std::string adapt = cfg.get("adapt", "none");
  if (adapt == "none") {
    return g;
  }
  if (adapt == "head_only") {
    g.freeze_backbone();
    return g;
  }
  std::set<std::string> targets;
  const std::string raw = cfg.get("colora.targets", "all");
  if (raw == "all") {
    targets = conv_layer_names(g);
  } else {
    std::stringstream ss(raw);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) targets.insert(tok);
    }
  }
  if (adapt == "colora") {
    return inject_colora(std::move(g), targets, order_from_config(cfg),
                         FreezePolicy::kFreezeBackbone, seed);
  }
  if (adapt == "cnn_adapter") {
    return inject_cnn_adapter(std::move(g), targets, FreezePolicy::kFreezeBackbone, seed);
  }
  throw ValueError("config: adapt must be none|head_only|colora|cnn_adapter, got " + adapt);
}

TrainConfig train_config_from(const Config& cfg) {
  TrainConfig tc;
  tc.epochs = cfg.get_int("train.epochs", 5);
  tc.batch_size = cfg.get_int("train.batch", 16);
  tc.adam.lr = cfg.get_double("train.lr", 1e-3);
  tc.adam.beta1 = cfg.get_double("train.beta1", 0.9);
  tc.adam.beta2 = cfg.get_double("train.beta2", 0.999);
  tc.adam.eps = cfg.get_double("train.eps", 1e-8);
  tc.merge_interval = cfg.get_int("merge.interval", 0);
  tc.seed = cfg.get_u64("seed", 0);
  tc.runs = cfg.get_int("runs", 1);
  tc.parallel_runs = cfg.get_bool("parallel", false);
  return tc;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write: " + path.string());
  os << content;
  if (!os) throw IoError("write failed: " + path.string());
}

void write_manifest(const fs::path& out_dir, const Config& cfg, const std::string& data_hash,
                    const std::vector<std::string>& artifacts) {
  std::ostringstream os;
  os << "colora-manifest v1\n";
  for (const auto& [k, v] : cfg.items()) os << "config " << k << '=' << v << '\n';
  os << "input data.hash=" << data_hash << '\n';
  for (const std::string& a : artifacts) os << "artifact " << a << '\n';
  write_text_file(out_dir / "manifest.txt", os.str());
}

// ---- subcommands --------------------------------------------------------------

struct TrainArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  bool svg = false;
};

int cmd_train(const TrainArgs& args) {
  // Input phase: any failure here must leave no partial outputs behind.
  Config cfg = Config::from_file(args.config_path);
  for (const std::string& o : args.overrides) cfg.apply(o);
  const std::string out_dir = !args.out_dir.empty() ? args.out_dir : cfg.get("out.dir", "colora_out");
  cfg.set("out.dir", out_dir);

  const std::vector<int> head = cfg.get_int_list("arch.head", {16, 16, 4});
  if (head.size() != 3) throw ValueError("config: arch.head must be reduce,hidden,classes");
  std::string data_hash;
  const DatasetSplits data = load_data_from_config(cfg, head[2], &data_hash);
  const TrainConfig tc = train_config_from(cfg);
  const ModelFactory factory = [&cfg](uint64_t seed) { return build_model_from_config(cfg, seed); };
  {  // fail fast on model/config problems before any output exists
    ModelGraph probe = factory(tc.seed);
    probe.infer_shapes();
  }

  MultiRunResult result = multirun(factory, data, tc);

  // Output phase.
  fs::create_directories(out_dir);
  std::vector<std::string> artifacts;
  for (RunOutcome& run : result.runs) {
    if (!run.ok) continue;
    const std::string stem = "run" + std::to_string(run.run_index);
    {
      std::ostringstream os;
      write_history_csv(run.history, os);
      write_text_file(fs::path(out_dir) / (stem + "_history.csv"), os.str());
      artifacts.push_back(stem + "_history.csv");
    }
    {
      std::ostringstream os;
      write_timing_csv(run.history, os);
      write_text_file(fs::path(out_dir) / (stem + "_timing.csv"), os.str());
      artifacts.push_back(stem + "_timing.csv");
    }
    save_checkpoint(run.final_model, (fs::path(out_dir) / (stem + "_final.ckpt")).string());
    artifacts.push_back(stem + "_final.ckpt");
  }
  {
    std::ostringstream os;
    write_aggregate_csv(result.aggregate, os);
    write_text_file(fs::path(out_dir) / "aggregate.csv", os.str());
    artifacts.push_back("aggregate.csv");
  }
  if (args.svg && result.aggregate.epochs > 0) {
    for (const char* metric : {"acc", "loss"}) {
      std::vector<PlotSeries> series;
      for (const char* split : {"train", "val", "test"}) {
        const auto& agg = result.aggregate.series.at(std::string(split) + "_" + metric);
        PlotSeries ps;
        ps.label = split;
        for (int e = 0; e < result.aggregate.epochs; ++e) {
          ps.points.emplace_back(e + 1, agg.median[static_cast<size_t>(e)]);
        }
        series.push_back(std::move(ps));
      }
      std::ostringstream os;
      const std::string ylabel = std::string(metric) == "acc" ? "accuracy" : "loss";
      write_line_plot(os, "median " + ylabel + " across runs", "epoch", ylabel, series);
      const std::string name = "curves_" + ylabel + ".svg";
      write_text_file(fs::path(out_dir) / name, os.str());
      artifacts.push_back(name);
    }
  }
  write_manifest(out_dir, cfg, data_hash, artifacts);

  int failed = 0;
  for (const RunOutcome& run : result.runs) {
    if (!run.ok) {
      ++failed;
      std::cerr << "run " << run.run_index << " failed: " << run.error << '\n';
    }
  }
  std::cout << "completed " << result.aggregate.completed_runs << "/" << result.runs.size()
            << " runs; outputs in " << out_dir << '\n';
  return failed == 0 ? kExitOk : kExitNumeric;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir, const std::string& split_name,
             const std::string& out_dir, bool svg) {
  ModelGraph g = load_checkpoint(ckpt);
  const int classes = g.num_classes();
  if (!fs::is_directory(data_dir)) throw ValueError("dataset directory not found: " + data_dir);
  const DatasetSplits data = load_dataset(data_dir, classes);
  if (data.num_classes != classes) {
    throw ValueError("class-count mismatch: model has " + std::to_string(classes) +
                     ", dataset has " + std::to_string(data.num_classes));
  }
  const SplitData* split = nullptr;
  if (split_name == "train") split = &data.train;
  if (split_name == "val") split = &data.val;
  if (split_name == "test") split = &data.test;
  if (!split) throw ValueError("split must be train|val|test, got " + split_name);

  const Tensor scores = softmax_rows(batched_scores(g, split->images));
  const EvalReport report = evaluate(scores, split->labels);

  fs::create_directories(out_dir);
  {
    std::ostringstream os;
    write_classwise_csv(report, os);
    write_text_file(fs::path(out_dir) / "metrics.csv", os.str());
  }
  {
    std::ostringstream os;
    write_confusion_csv(report.cm, os);
    write_text_file(fs::path(out_dir) / "confusion.csv", os.str());
  }
  for (size_t c = 0; c < report.rocs.size(); ++c) {
    std::ostringstream os;
    write_roc_csv(report.rocs[c], os);
    write_text_file(fs::path(out_dir) / ("roc_class" + std::to_string(c) + ".csv"), os.str());
  }
  if (svg) {
    std::vector<PlotSeries> series;
    for (size_t c = 0; c < report.rocs.size(); ++c) {
      PlotSeries ps;
      ps.label = "class " + std::to_string(c);
      ps.points = report.rocs[c].points;
      series.push_back(std::move(ps));
    }
    std::ostringstream os;
    write_line_plot(os, "one-vs-rest ROC (" + split_name + ")", "false positive rate",
                    "true positive rate", series);
    write_text_file(fs::path(out_dir) / "roc.svg", os.str());
  }
  for (const std::string& w : report.cw.warnings) std::cerr << "warning: " << w << '\n';
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "split=" << split_name << " samples=" << split->count()
            << " accuracy=" << report.cw.accuracy << " macro_f1=" << report.cw.macro_f1
            << " macro_auc=" << macro_auc(report) << "; reports in " << out_dir << '\n';
  return kExitOk;
}

int cmd_distill(const std::string& ckpt, const std::string& data_dir, int discard_top, int keep,
                const std::string& out_dir, const std::string& split_name) {
  ModelGraph g = load_checkpoint(ckpt);
  const int classes = g.num_classes();
  if (!fs::is_directory(data_dir)) throw ValueError("dataset directory not found: " + data_dir);
  DatasetSplits data = load_dataset(data_dir, classes);

  SplitData* split = nullptr;
  if (split_name == "train") split = &data.train;
  if (split_name == "val") split = &data.val;
  if (split_name == "test") split = &data.test;
  if (!split) throw ValueError("split must be train|val|test, got " + split_name);

  auto [distilled, report] = distill(*split, g, discard_top, keep);
  *split = std::move(distilled);

  fs::create_directories(out_dir);
  save_dataset(data, out_dir);
  {
    std::ostringstream os;
    os << "class,rank,entropy\n";
    char buf[64];
    for (const DistillClassReport& cr : report.classes) {
      for (size_t r = 0; r < cr.sorted_entropies.size(); ++r) {
        std::snprintf(buf, sizeof(buf), "%d,%zu,%.8f\n", cr.class_id, r, cr.sorted_entropies[r]);
        os << buf;
      }
    }
    write_text_file(fs::path(out_dir) / "entropies.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "class,sample_id,status\n";
    for (const DistillClassReport& cr : report.classes) {
      for (const std::string& id : cr.discarded) os << cr.class_id << ',' << id << ",discarded\n";
      for (const std::string& id : cr.retained) os << cr.class_id << ',' << id << ",retained\n";
    }
    write_text_file(fs::path(out_dir) / "selection.csv", os.str());
  }
  std::cout << "retained " << split->count() << " samples (" << keep << " per class, discarded top "
            << discard_top << "); distilled dataset in " << out_dir << '\n';
  return kExitOk;
}

int cmd_params(const std::string& config_path, const std::string& ckpt,
               const std::vector<std::string>& overrides, const std::string& out_csv) {
  ModelGraph g;
  if (!ckpt.empty()) {
    g = load_checkpoint(ckpt);
  } else if (!config_path.empty()) {
    Config cfg = Config::from_file(config_path);
    for (const std::string& o : overrides) cfg.apply(o);
    g = build_model_from_config(cfg, cfg.get_u64("seed", 0));
  } else {
    throw ValueError("params: provide --config or --checkpoint");
  }
  const ParamReport report = count_params(g);

  std::printf("%-16s %-12s %12s %12s %12s %12s\n", "layer", "kind", "n_original", "n_adapter",
              "trainable", "frozen");
  for (const ParamRow& r : report.rows) {
    std::printf("%-16s %-12s %12ld %12ld %12ld %12ld\n", r.name.c_str(), r.kind.c_str(),
                r.n_original, r.n_adapter, r.trainable, r.frozen);
  }
  std::printf("total trainable=%ld frozen=%ld fraction=%.4f\n", report.trainable_total,
              report.frozen_total, report.trainable_fraction());

  if (!out_csv.empty()) {
    std::ostringstream os;
    write_param_report_csv(report, os);
    write_text_file(out_csv, os.str());
  }
  return kExitOk;
}

int cmd_merge_check(int layers, uint64_t seed) {
  const MergeSweepResult r = merge_equivalence_sweep(layers, seed);
  std::printf("checked %d random layers; max relative deviation %.3e (tolerance 1e-5)\n",
              r.layers_checked, r.max_rel_deviation);
  return r.max_rel_deviation <= 1e-5 ? kExitOk : kExitNumeric;
}

struct GenDataArgs {
  std::string kind = "shapes4";
  std::string out_dir;
  int per_class = 64;
  int val_per_class = 16;
  int test_per_class = 16;
  int hw = 16;
  double noise = 0.15;
  double shift = 0.0;
  uint64_t seed = 7;
};

int cmd_gen_data(const GenDataArgs& args) {
  SyntheticSpec spec;
  spec.kind = args.kind;
  spec.train_per_class = args.per_class;
  spec.val_per_class = args.val_per_class;
  spec.test_per_class = args.test_per_class;
  spec.height = args.hw;
  spec.width = args.hw;
  spec.noise = args.noise;
  spec.shift = args.shift;
  spec.seed = args.seed;
  const DatasetSplits data = make_synthetic(spec);
  save_dataset(data, args.out_dir);
  std::cout << "wrote " << data.train.count() << "/" << data.val.count() << "/"
            << data.test.count() << " train/val/test samples to " << args.out_dir << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CoLoRA fine-tuning toolkit"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model per config, with multi-run support");
  train_cmd->add_option("--config", train_args.config_path, "key=value config file")->required();
  train_cmd->add_option("--out", train_args.out_dir, "output directory (overrides out.dir)");
  train_cmd->add_flag("--svg", train_args.svg, "emit SVG learning-curve plots");
  train_cmd->add_option("overrides", train_args.overrides, "key=value config overrides");

  std::string eval_ckpt, eval_data, eval_split = "test", eval_out = "eval_out";
  bool eval_svg = false;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--data", eval_data)->required();
  eval_cmd->add_option("--split", eval_split, "train|val|test (default test)");
  eval_cmd->add_option("--out", eval_out, "report directory");
  eval_cmd->add_flag("--svg", eval_svg, "emit ROC SVG plot");

  std::string di_ckpt, di_data, di_out, di_split = "train";
  int di_discard = 10, di_keep = 0;
  auto* distill_cmd = app.add_subcommand("distill", "entropy-based dataset distillation");
  distill_cmd->add_option("--checkpoint", di_ckpt)->required();
  distill_cmd->add_option("--data", di_data)->required();
  distill_cmd->add_option("--discard-top", di_discard, "highest-entropy samples to drop per class");
  distill_cmd->add_option("--keep", di_keep, "samples to retain per class")->required();
  distill_cmd->add_option("--out", di_out, "output dataset directory")->required();
  distill_cmd->add_option("--split", di_split, "split to distill (default train)");

  std::string pa_config, pa_ckpt, pa_csv;
  std::vector<std::string> pa_overrides;
  auto* params_cmd = app.add_subcommand("params", "parameter accounting table");
  params_cmd->add_option("--config", pa_config);
  params_cmd->add_option("--checkpoint", pa_ckpt);
  params_cmd->add_option("--csv", pa_csv, "also write the table as CSV");
  params_cmd->add_option("overrides", pa_overrides, "key=value config overrides");

  int mc_layers = 200;
  uint64_t mc_seed = 20260810;
  auto* merge_cmd = app.add_subcommand("merge-check", "merge-equivalence property sweep");
  merge_cmd->add_option("--layers", mc_layers, "number of random layers (default 200)");
  merge_cmd->add_option("--seed", mc_seed);

  GenDataArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic dataset in archive format");
  gen_cmd->add_option("--kind", gen_args.kind, "shapes4|blobs2");
  gen_cmd->add_option("--out", gen_args.out_dir)->required();
  gen_cmd->add_option("--per-class", gen_args.per_class, "train samples per class");
  gen_cmd->add_option("--val-per-class", gen_args.val_per_class);
  gen_cmd->add_option("--test-per-class", gen_args.test_per_class);
  gen_cmd->add_option("--hw", gen_args.hw, "image height and width");
  gen_cmd->add_option("--noise", gen_args.noise);
  gen_cmd->add_option("--shift", gen_args.shift, "0 = source domain, 1 = inverted domain");
  gen_cmd->add_option("--seed", gen_args.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_ckpt, eval_data, eval_split, eval_out, eval_svg);
    if (distill_cmd->parsed())
      return cmd_distill(di_ckpt, di_data, di_discard, di_keep, di_out, di_split);
    if (params_cmd->parsed()) return cmd_params(pa_config, pa_ckpt, pa_overrides, pa_csv);
    if (merge_cmd->parsed()) return cmd_merge_check(mc_layers, mc_seed);
    if (gen_cmd->parsed()) return cmd_gen_data(gen_args);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
