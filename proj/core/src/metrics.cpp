// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include "colora/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "colora/autograd.hpp"
#include "colora/error.hpp"

namespace colora {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double mean_defined(const std::vector<double>& values) {
  double acc = 0.0;
  int n = 0;
  for (double v : values) {
    if (!std::isnan(v)) {
      acc += v;
      ++n;
    }
  }
  return n == 0 ? kNan : acc / n;
}

}  // namespace

long ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0L);
}

long ConfusionMatrix::trace() const {
  long t = 0;
  for (int i = 0; i < k; ++i) t += at(i, i);
  return t;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int k) {
  if (truth.size() != predicted.size()) {
    throw ValueError("confusion: label vectors have different lengths");
  }
  if (k < 1) throw ValueError("confusion: class count must be >= 1");
  ConfusionMatrix cm(k);
  for (size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 || predicted[i] >= k) {
      throw ValueError("confusion: label out of range at index " + std::to_string(i));
    }
    cm.at(truth[i], predicted[i]) += 1;
  }
  return cm;
}

ClasswiseReport classwise(const ConfusionMatrix& cm) {
  ClasswiseReport report;
  const long total = cm.total();
  report.accuracy = total == 0 ? kNan : static_cast<double>(cm.trace()) / static_cast<double>(total);
  if (total == 0) report.warnings.push_back("empty confusion matrix; accuracy undefined");

  std::vector<double> recalls, precisions, specificities, f1s;
  for (int i = 0; i < cm.k; ++i) {
    long row = 0, col = 0;
    for (int j = 0; j < cm.k; ++j) {
      row += cm.at(i, j);
      col += cm.at(j, i);
    }
    ClassMetrics m;
    if (row == 0) {
      m.recall = kNan;
      report.warnings.push_back("class " + std::to_string(i) +
                                " has no true samples; recall undefined, excluded from macro");
    } else {
      m.recall = static_cast<double>(cm.at(i, i)) / static_cast<double>(row);
    }
    if (col == 0) {
      m.precision = kNan;
      report.warnings.push_back("class " + std::to_string(i) +
                                " was never predicted; precision undefined, excluded from macro");
    } else {
      m.precision = static_cast<double>(cm.at(i, i)) / static_cast<double>(col);
    }
    const long neg = total - row;  // samples whose true class is not i
    if (neg == 0) {
      m.specificity = kNan;
      report.warnings.push_back("class " + std::to_string(i) +
                                " covers all samples; specificity undefined");
    } else {
      long true_neg = 0;
      for (int p = 0; p < cm.k; ++p) {
        if (p == i) continue;
        for (int q = 0; q < cm.k; ++q) {
          if (q != i) true_neg += cm.at(p, q);
        }
      }
      m.specificity = static_cast<double>(true_neg) / static_cast<double>(neg);
    }
    if (std::isnan(m.precision) || std::isnan(m.recall)) {
      m.f1 = kNan;
    } else if (m.precision + m.recall == 0.0) {
      m.f1 = 0.0;
    } else {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    recalls.push_back(m.recall);
    precisions.push_back(m.precision);
    specificities.push_back(m.specificity);
    f1s.push_back(m.f1);
    report.per_class.push_back(m);
  }
  report.macro_recall = mean_defined(recalls);
  report.macro_precision = mean_defined(precisions);
  report.macro_specificity = mean_defined(specificities);
  report.macro_f1 = mean_defined(f1s);
  return report;
}

RocCurve roc_auc_ovr(const Tensor& scores, std::span<const int> labels, int cls) {
  if (scores.rank() != 2) throw ShapeError("roc_auc_ovr expects (N, K) scores");
  const int n = scores.dim(0), k = scores.dim(1);
  if (static_cast<size_t>(n) != labels.size()) throw ValueError("roc_auc_ovr: label count mismatch");
  if (cls < 0 || cls >= k) throw ValueError("roc_auc_ovr: class index out of range");

  std::vector<std::pair<double, bool>> samples;  // (score, is_positive)
  samples.reserve(static_cast<size_t>(n));
  long pos = 0, neg = 0;
  for (int i = 0; i < n; ++i) {
    const bool is_pos = labels[static_cast<size_t>(i)] == cls;
    samples.emplace_back(scores.at(i, cls), is_pos);
    (is_pos ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) {
    throw ValueError("roc_auc_ovr: AUC undefined for class " + std::to_string(cls) +
                     " (needs at least one positive and one negative)");
  }

  std::sort(samples.begin(), samples.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  long tp = 0, fp = 0;
  double auc = 0.0;
  size_t i = 0;
  while (i < samples.size()) {
    // One sweep step per distinct score; ties advance together.
    const double score = samples[i].first;
    while (i < samples.size() && samples[i].first == score) {
      (samples[i].second ? tp : fp) += 1;
      ++i;
    }
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    const auto& prev = curve.points.back();
    auc += (fpr - prev.first) * (tpr + prev.second) / 2.0;
    curve.points.emplace_back(fpr, tpr);
  }
  curve.auc = auc;
  return curve;
}

EvalReport evaluate(const Tensor& scores, std::span<const int> labels) {
  if (scores.rank() != 2) throw ShapeError("evaluate expects (N, K) scores");
  const int k = scores.dim(1);
  const std::vector<int> preds = argmax_rows(scores);
  EvalReport report;
  report.cm = confusion(labels, preds, k);
  report.cw = classwise(report.cm);
  for (int c = 0; c < k; ++c) {
    try {
      report.rocs.push_back(roc_auc_ovr(scores, labels, c));
    } catch (const ValueError&) {
      RocCurve empty;
      empty.auc = std::numeric_limits<double>::quiet_NaN();
      report.rocs.push_back(std::move(empty));
      report.warnings.push_back("class " + std::to_string(c) + ": AUC undefined (degenerate)");
    }
  }
  return report;
}

double macro_auc(const EvalReport& report) {
  std::vector<double> aucs;
  for (const RocCurve& r : report.rocs) aucs.push_back(r.auc);
  return mean_defined(aucs);
}

namespace {

void put_metric(std::ostream& os, double v) {
  if (std::isnan(v)) {
    os << "nan";
  } else {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    os << buf;
  }
}

}  // namespace

void write_classwise_csv(const EvalReport& report, std::ostream& os) {
  os << "class,auc,recall,precision,specificity,f1\n";
  for (size_t i = 0; i < report.cw.per_class.size(); ++i) {
    const ClassMetrics& m = report.cw.per_class[i];
    os << i << ',';
    put_metric(os, i < report.rocs.size() ? report.rocs[i].auc : std::numeric_limits<double>::quiet_NaN());
    os << ',';
    put_metric(os, m.recall);
    os << ',';
    put_metric(os, m.precision);
    os << ',';
    put_metric(os, m.specificity);
    os << ',';
    put_metric(os, m.f1);
    os << '\n';
  }
  os << "macro,";
  put_metric(os, macro_auc(report));
  os << ',';
  put_metric(os, report.cw.macro_recall);
  os << ',';
  put_metric(os, report.cw.macro_precision);
  os << ',';
  put_metric(os, report.cw.macro_specificity);
  os << ',';
  put_metric(os, report.cw.macro_f1);
  os << "\naccuracy,";
  put_metric(os, report.cw.accuracy);
  os << ",,,,\n";
}

void write_confusion_csv(const ConfusionMatrix& cm, std::ostream& os) {
  os << "true\\pred";
  for (int j = 0; j < cm.k; ++j) os << ',' << j;
  os << '\n';
  for (int i = 0; i < cm.k; ++i) {
    os << i;
    for (int j = 0; j < cm.k; ++j) os << ',' << cm.at(i, j);
    os << '\n';
  }
}

void write_roc_csv(const RocCurve& curve, std::ostream& os) {
  os << "fpr,tpr\n";
  char buf[64];
  for (const auto& [fpr, tpr] : curve.points) {
    std::snprintf(buf, sizeof(buf), "%.9f,%.9f\n", fpr, tpr);
    os << buf;
  }
}

}  // namespace colora
