#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace aptd::testing {

double label_entropy(const std::vector<Label>& labels) {
  if (labels.empty()) return 0.0;
  double anomalies = 0.0;
  for (Label l : labels) anomalies += l == Label::anomaly ? 1.0 : 0.0;
  const double pa = anomalies / static_cast<double>(labels.size());
  double h = 0.0;
  for (double p : {pa, 1.0 - pa})
    if (p > 0.0) h -= p * std::log(p) / std::log(2.0);
  return h;
}

SplitStats split_by_value(const std::vector<int>& values, const std::vector<Label>& labels) {
  std::map<int, std::vector<Label>> groups;
  for (std::size_t i = 0; i < values.size(); ++i) groups[values[i]].push_back(labels[i]);
  const double n = static_cast<double>(labels.size());
  SplitStats s;
  s.gain = label_entropy(labels);
  for (const auto& [v, g] : groups) {
    const double w = static_cast<double>(g.size()) / n;
    s.gain -= w * label_entropy(g);
    s.split_info -= w * std::log(w) / std::log(2.0);
  }
  if (s.split_info > 0.0) s.gain_ratio = s.gain / s.split_info;
  return s;
}

std::array<double, 2> nb_posterior(const std::vector<std::vector<int>>& rows,
                                   const std::vector<Label>& labels, double alpha,
                                   const std::vector<int>& query) {
  const std::size_t width = query.size();
  std::array<double, 2> joint{};
  for (int c = 0; c < 2; ++c) {
    const Label cls = c == 0 ? Label::normal : Label::anomaly;
    double in_class = 0.0;
    for (Label l : labels) in_class += l == cls ? 1.0 : 0.0;
    double p = in_class / static_cast<double>(labels.size());
    for (std::size_t f = 0; f < width; ++f) {
      std::set<int> seen;
      for (const auto& r : rows) seen.insert(r[f]);
      if (!seen.count(query[f])) continue;
      double match = 0.0;
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (labels[i] == cls && rows[i][f] == query[f]) match += 1.0;
      p *= (match + alpha) / (in_class + alpha * static_cast<double>(seen.size()));
    }
    joint[static_cast<std::size_t>(c)] = p;
  }
  const double z = joint[0] + joint[1];
  return {joint[0] / z, joint[1] / z};
}

namespace {

// Mean cross-entropy by plain loops over units and pieces.
double reference_loss(const MlpModel& m, const RowMatrix& batch, const std::vector<Label>& labels) {
  double loss = 0.0;
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    std::vector<double> a(batch.row(r).data(), batch.row(r).data() + batch.cols());
    for (const MaxoutLayer& layer : m.hidden) {
      std::vector<double> next(layer.units());
      for (std::size_t j = 0; j < layer.units(); ++j) {
        double best = -INFINITY;
        for (std::size_t p = 0; p < layer.pieces(); ++p) {
          double z = layer.biases[p](static_cast<Eigen::Index>(j));
          for (std::size_t i = 0; i < a.size(); ++i)
            z += a[i] * layer.weights[p](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          best = std::max(best, z);
        }
        next[j] = best;
      }
      a = std::move(next);
    }
    double logit[2];
    for (int k = 0; k < 2; ++k) {
      logit[k] = m.out_bias(k);
      for (std::size_t i = 0; i < a.size(); ++i) logit[k] += a[i] * m.out_weights(static_cast<Eigen::Index>(i), k);
    }
    const int truth = labels[static_cast<std::size_t>(r)] == Label::anomaly ? 1 : 0;
    const double mx = std::max(logit[0], logit[1]);
    const double lse = mx + std::log(std::exp(logit[0] - mx) + std::exp(logit[1] - mx));
    loss += lse - logit[truth];
  }
  return loss / static_cast<double>(batch.rows());
}

template <typename M>
double check_tensor(M& param, const M& grad, MlpModel& model, const RowMatrix& batch,
                    const std::vector<Label>& labels, double h) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < param.size(); ++i) {
    const double keep = param.data()[i];
    param.data()[i] = keep + h;
    const double up = reference_loss(model, batch, labels);
    param.data()[i] = keep - h;
    const double down = reference_loss(model, batch, labels);
    param.data()[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grad.data()[i];
    // Gradients below 1e-6 in magnitude are compared on an absolute scale.
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic) / scale);
  }
  return worst;
}

}  // namespace

double max_gradient_error(const MlpModel& model, const RowMatrix& batch,
                          const std::vector<Label>& labels, double h) {
  const auto [loss, grad] = loss_and_gradients(model, batch, labels);
  MlpModel m = model;
  double worst = std::abs(loss - reference_loss(m, batch, labels));
  for (std::size_t l = 0; l < m.hidden.size(); ++l)
    for (std::size_t p = 0; p < m.hidden[l].pieces(); ++p) {
      worst = std::max(worst, check_tensor(m.hidden[l].weights[p], grad.hidden[l].weights[p], m, batch, labels, h));
      worst = std::max(worst, check_tensor(m.hidden[l].biases[p], grad.hidden[l].biases[p], m, batch, labels, h));
    }
  worst = std::max(worst, check_tensor(m.out_weights, grad.out_weights, m, batch, labels, h));
  worst = std::max(worst, check_tensor(m.out_bias, grad.out_bias, m, batch, labels, h));
  return worst;
}

double pair_counting_auc(const std::vector<double>& scores, const std::vector<Label>& truth) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (truth[i] != Label::anomaly) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (truth[j] != Label::normal) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

Tally tally(const std::vector<Label>& predicted, const std::vector<Label>& truth) {
  Tally t;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool alert = predicted[i] == Label::anomaly;
    const bool attack = truth[i] == Label::anomaly;
    if (alert && attack) ++t.tp;
    else if (alert) ++t.fp;
    else if (attack) ++t.fn;
    else ++t.tn;
  }
  return t;
}

}  // namespace aptd::testing
