#include "aptdetect/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "aptdetect/dataset.hpp"
#include "aptdetect/error.hpp"

namespace aptd {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> truth) {
  if (predictions.size() != truth.size())
    throw Error("confusion: " + std::to_string(predictions.size()) + " predictions for " +
                std::to_string(truth.size()) + " labels");
  if (truth.empty()) throw Error("confusion: no records");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool alert = predictions[i] == Label::anomaly;
    const bool attack = truth[i] == Label::anomaly;
    if (alert && attack) ++cm.tp;
    else if (alert) ++cm.fp;
    else if (attack) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

ConfusionMatrix aggregate_cv(std::span<const ConfusionMatrix> per_fold) {
  if (per_fold.empty()) throw Error("aggregate_cv: no folds");
  ConfusionMatrix sum;
  for (const ConfusionMatrix& cm : per_fold) sum += cm;
  return sum;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.tnr = ratio(cm.tn, cm.tn + cm.fp);
  r.tpr = ratio(cm.tp, cm.tp + cm.fn);
  r.acc = ratio(cm.tp + cm.tn, cm.total());
  r.ppv = ratio(cm.tp, cm.tp + cm.fp);
  if (r.ppv && r.tpr && *r.ppv + *r.tpr > 0.0)
    r.f_measure = 2.0 * (*r.ppv * *r.tpr) / (*r.ppv + *r.tpr);
  if (r.tnr) r.fpr = 1.0 - *r.tnr;
  if (r.tpr) r.fnr = 1.0 - *r.tpr;
  return r;
}

RocCurve roc_curve(std::span<const double> anomaly_scores, std::span<const Label> truth) {
  if (anomaly_scores.size() != truth.size()) throw Error("roc_curve: length mismatch");
  const auto positives = static_cast<std::size_t>(
      std::count(truth.begin(), truth.end(), Label::anomaly));
  const std::size_t negatives = truth.size() - positives;
  if (positives == 0 || negatives == 0) throw Error("roc_curve: truth holds a single class");

  std::vector<std::size_t> order(truth.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return anomaly_scores[a] > anomaly_scores[b];
  });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double score = anomaly_scores[order[i]];
    for (; i < order.size() && anomaly_scores[order[i]] == score; ++i)
      (truth[order[i]] == Label::anomaly ? tp : fp)++;
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives), score});
  }
  return curve;
}

double auc(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) * 0.5;
  return area;
}

double auc(const RocCurve& curve) { return auc(std::span<const RocPoint>(curve.points)); }

LiftChart lift_chart(std::span<const double> anomaly_scores, std::span<const Label> truth,
                     Label target, std::size_t n_bins) {
  if (anomaly_scores.size() != truth.size()) throw Error("lift_chart: length mismatch");
  if (n_bins == 0) throw Error("lift_chart: n_bins must be >= 1");
  if (truth.size() < n_bins) throw Error("lift_chart: fewer records than bins");

  const std::size_t n = truth.size();
  std::vector<double> confidence(n);
  for (std::size_t i = 0; i < n; ++i)
    confidence[i] = target == Label::anomaly ? anomaly_scores[i] : 1.0 - anomaly_scores[i];

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return confidence[a] > confidence[b]; });

  LiftChart chart;
  chart.target = target;
  const std::size_t base = n / n_bins;
  const std::size_t extra = n % n_bins;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    LiftBin bin;
    bin.size = base + (b < extra ? 1 : 0);
    bin.max_confidence = confidence[order[pos]];
    bin.min_confidence = confidence[order[pos + bin.size - 1]];
    for (std::size_t k = 0; k < bin.size; ++k)
      if (truth[order[pos + k]] == target) ++bin.target_count;
    pos += bin.size;
    chart.bins.push_back(bin);
  }
  return chart;
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "fpr,tpr,threshold\n";
  for (const RocPoint& p : curve.points)
    out << format_number(p.fpr) << ',' << format_number(p.tpr) << ','
        << format_number(p.threshold) << '\n';
}

RocCurve read_roc_csv(std::istream& in) {
  RocCurve curve;
  std::string line;
  if (!std::getline(in, line)) throw Error("roc csv: missing header");
  auto parse = [](std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw Error("roc csv: bad number '" + std::string(s) + "'");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::string_view v(line);
    const std::size_t a = v.find(',');
    const std::size_t b = v.find(',', a + 1);
    if (a == std::string_view::npos || b == std::string_view::npos)
      throw Error("roc csv: expected 3 columns");
    curve.points.push_back(
        {parse(v.substr(0, a)), parse(v.substr(a + 1, b - a - 1)), parse(v.substr(b + 1))});
  }
  return curve;
}

void write_lift_csv(std::ostream& out, const LiftChart& chart) {
  out << "bin,size,target_count,target_fraction,min_confidence,max_confidence\n";
  for (std::size_t b = 0; b < chart.bins.size(); ++b) {
    const LiftBin& bin = chart.bins[b];
    out << b + 1 << ',' << bin.size << ',' << bin.target_count << ','
        << format_number(static_cast<double>(bin.target_count) / static_cast<double>(bin.size))
        << ',' << format_number(bin.min_confidence) << ',' << format_number(bin.max_confidence)
        << '\n';
  }
}

}  // namespace aptd
