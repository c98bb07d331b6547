#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "aptdetect/schema.hpp"

namespace aptd {

// Anomaly is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> truth);

// Elementwise sum. Throws on an empty list.
ConfusionMatrix aggregate_cv(std::span<const ConfusionMatrix> per_fold);

// A metric is empty when its denominator is zero.
struct MetricsReport {
  std::optional<double> acc;
  std::optional<double> tpr;  // recall, sensitivity
  std::optional<double> tnr;  // specificity
  std::optional<double> ppv;  // precision
  std::optional<double> f_measure;
  std::optional<double> fpr;  // 1 - tnr
  std::optional<double> fnr;  // 1 - tpr
  std::optional<double> auc;

  std::optional<double> recall() const { return tpr; }
  std::optional<double> precision() const { return ppv; }
};

MetricsReport metrics(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr;
  double tpr;
  double threshold;  // predict anomaly when score >= threshold; +inf at the origin
};

struct RocCurve {
  std::vector<RocPoint> points;
};

// One point per distinct score, swept from the highest score down, starting
// at (0,0) and ending at (1,1). Throws when `truth` holds a single class.
RocCurve roc_curve(std::span<const double> anomaly_scores, std::span<const Label> truth);

// Trapezoidal area under the curve.
double auc(const RocCurve& curve);
double auc(std::span<const RocPoint> points);

struct LiftBin {
  std::size_t size = 0;
  std::size_t target_count = 0;
  double min_confidence = 0.0;
  double max_confidence = 0.0;
};

struct LiftChart {
  Label target = Label::anomaly;
  std::vector<LiftBin> bins;
};

// Confidence for the target class is the anomaly score itself for anomaly
// and its complement for normal. Records are ranked by descending confidence
// (ties by input position) and dealt into n_bins contiguous bins, the first
// n % n_bins of which hold one extra record.
LiftChart lift_chart(std::span<const double> anomaly_scores, std::span<const Label> truth,
                     Label target, std::size_t n_bins = 10);

// CSV helpers. Empty metrics are written as empty cells.
void write_roc_csv(std::ostream& out, const RocCurve& curve);
RocCurve read_roc_csv(std::istream& in);
void write_lift_csv(std::ostream& out, const LiftChart& chart);

}  // namespace aptd
