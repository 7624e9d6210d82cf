// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "colora/model.hpp"
#include "colora/tensor.hpp"

namespace colora {

/// One dataset split: images (N, H, W, C) scaled to [0, 1], integer class
/// labels and unique string sample ids, all index-aligned.
struct SplitData {
  Tensor images;
  std::vector<int> labels;
  std::vector<std::string> ids;

  int count() const { return images.empty() ? 0 : images.dim(0); }
};

struct DatasetSplits {
  SplitData train, val, test;
  int num_classes = 0;
};

// Archive layout per directory:
//   {train,val,test}_images.cot1   u8 tensor (N, H, W, C)
//   {train,val,test}_labels.cot1   i64 tensor (N)
//   {train,val,test}_manifest.txt  one sample id per line, row order
// .cot1 framing: magic "COT1", u8 dtype (0=f32, 1=u8, 2=i64), u8 ndim,
// ndim x u32 LE dims, raw LE payload.

/// Loads and validates all three splits. Pixels are converted u8 -> [0, 1].
/// When expected_classes > 0 labels are bounds-checked against it, otherwise
/// the class count is inferred as max label + 1.
DatasetSplits load_dataset(const std::string& dir, int expected_classes = 0);

/// Inverse of load_dataset; pixel floats are mapped back with round(x * 255).
void save_dataset(const DatasetSplits& splits, const std::string& dir);

/// Keeps, per class, the first n samples by lexicographic sample id; the
/// result is ordered lexicographically by id. Throws ValueError when a class
/// has fewer than n samples.
SplitData balance_by_first_n(const SplitData& split, int n_per_class);

/// The "min" variant: n resolves to the smallest per-class count.
SplitData balance_by_first_n_min(const SplitData& split);

/// Per-class sample counts over observed labels (size = max label + 1).
std::vector<int> class_counts(const SplitData& split);

/// Shannon entropy -sum_k p_k ln p_k per row, with 0 ln 0 = 0. Rows must be
/// nonnegative and sum to 1 within 1e-5 (they are renormalized); negative
/// entries raise ValueError.
Tensor predictive_entropy(const Tensor& probs);

struct DistillClassReport {
  int class_id = 0;
  std::vector<float> sorted_entropies;  // descending
  std::vector<std::string> discarded;   // the discard_top highest-entropy ids
  std::vector<std::string> retained;    // the next `keep` ids
};

struct DistillReport {
  std::vector<DistillClassReport> classes;
};

/// Entropy-based distillation: per class, samples are ranked by predictive
/// entropy (descending, ties broken by ascending id), the top discard_top are
/// dropped and the next `keep` retained. Probabilities come from the model's
/// softmax output. Throws ValueError when a class has fewer than
/// discard_top + keep samples.
std::pair<SplitData, DistillReport> distill(const SplitData& split, const ModelGraph& model,
                                            int discard_top, int keep, int batch_size = 64);

/// The selection rule of distill() applied to precomputed per-sample
/// entropies (index-aligned with the split).
std::pair<SplitData, DistillReport> distill_by_entropy(const SplitData& split,
                                                       std::span<const float> entropies,
                                                       int discard_top, int keep);

/// Gathers rows of a (N, ...) tensor into a new batch tensor.
Tensor take_rows(const Tensor& images, const std::vector<size_t>& rows);

/// Deterministic synthetic image datasets for experiments and tests.
///   "shapes4": horizontal bars / vertical bars / disk / checkerboard
///   "blobs2":  bright blob in the left / right half
/// `shift` in [0, 1] blends towards polarity-inverted images, providing the
/// domain-shifted transfer target.
struct SyntheticSpec {
  std::string kind = "shapes4";
  int train_per_class = 64;
  int val_per_class = 16;
  int test_per_class = 16;
  int height = 16;
  int width = 16;
  double noise = 0.15;
  double shift = 0.0;
  uint64_t seed = 7;
};

DatasetSplits make_synthetic(const SyntheticSpec& spec);

}  // namespace colora
