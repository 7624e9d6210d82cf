// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "colora/tensor.hpp"

namespace colora {

/// K x K counts; rows index the true class, columns the predicted class.
struct ConfusionMatrix {
  int k = 0;
  std::vector<long> counts;

  explicit ConfusionMatrix(int classes = 0)
      : k(classes), counts(static_cast<size_t>(classes) * static_cast<size_t>(classes), 0) {}

  long at(int i, int j) const { return counts[static_cast<size_t>(i) * k + j]; }
  long& at(int i, int j) { return counts[static_cast<size_t>(i) * k + j]; }
  long total() const;
  long trace() const;
};

/// Throws on length mismatch or out-of-range labels.
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int k);

/// Per-class values; NaN marks an undefined metric (zero denominator).
struct ClassMetrics {
  double recall = 0.0;
  double precision = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
};

struct ClasswiseReport {
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  // Unweighted means over classes where the metric is defined.
  double macro_recall = 0.0;
  double macro_precision = 0.0;
  double macro_specificity = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::string> warnings;
};

ClasswiseReport classwise(const ConfusionMatrix& cm);

/// One-vs-rest ROC: ordered (FPR, TPR) points from a descending threshold
/// sweep, starting at (0,0) and ending at (1,1); tied scores form a single
/// segment. auc is the trapezoidal area, equal to the pairwise-comparison
/// probability with half credit for ties.
struct RocCurve {
  std::vector<std::pair<double, double>> points;
  double auc = 0.0;
};

/// scores is (N, K); column `cls` is the positive score. Throws ValueError
/// when the class has no positives or no negatives (AUC undefined).
RocCurve roc_auc_ovr(const Tensor& scores, std::span<const int> labels, int cls);

/// Full evaluation from class scores: argmax predictions (ties to the lowest
/// index), confusion matrix, class-wise metrics and one ROC per class.
/// Degenerate classes get an empty curve with NaN AUC plus a warning.
struct EvalReport {
  ConfusionMatrix cm;
  ClasswiseReport cw;
  std::vector<RocCurve> rocs;
  std::vector<std::string> warnings;
};

EvalReport evaluate(const Tensor& scores, std::span<const int> labels);

/// Unweighted mean of the defined per-class AUCs.
double macro_auc(const EvalReport& report);

void write_classwise_csv(const EvalReport& report, std::ostream& os);
void write_confusion_csv(const ConfusionMatrix& cm, std::ostream& os);
void write_roc_csv(const RocCurve& curve, std::ostream& os);

}  // namespace colora
