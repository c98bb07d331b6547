#include "aptdetect/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aptdetect/error.hpp"

namespace aptd {

namespace {

FeatureKind parse_kind(const std::string& s) {
  if (s == "numeric") return FeatureKind::numeric;
  if (s == "categorical_binary") return FeatureKind::categorical_binary;
  if (s == "nominal") return FeatureKind::nominal;
  throw Error("nb: unknown feature kind '" + s + "'");
}

}  // namespace

NbModel fit_nb(const MixedTable& train, double alpha, double var_floor) {
  if (!(alpha > 0.0) || !(var_floor > 0.0)) throw Error("fit_nb: alpha and var_floor must be > 0");
  std::array<std::size_t, kNumClasses> class_n{};
  for (Label l : train.labels) class_n[class_index(l)]++;
  if (class_n[0] == 0 || class_n[1] == 0)
    throw Error("fit_nb: training set must contain both classes");

  NbModel model;
  model.alpha = alpha;
  model.var_floor = var_floor;
  const auto n = static_cast<double>(train.size());
  for (std::size_t c = 0; c < kNumClasses; ++c) model.priors[c] = static_cast<double>(class_n[c]) / n;

  for (std::size_t f = 0; f < train.width(); ++f) {
    NbFeature nf;
    nf.feature = train.columns[f];
    const auto col = train.values.col(static_cast<Eigen::Index>(f));

    if (!nf.categorical()) {
      ClassProbs sum{};
      for (std::size_t i = 0; i < train.size(); ++i)
        sum[class_index(train.labels[i])] += col(static_cast<Eigen::Index>(i));
      for (std::size_t c = 0; c < kNumClasses; ++c)
        nf.mean[c] = sum[c] / static_cast<double>(class_n[c]);
      ClassProbs sq{};
      for (std::size_t i = 0; i < train.size(); ++i) {
        const std::size_t c = class_index(train.labels[i]);
        const double d = col(static_cast<Eigen::Index>(i)) - nf.mean[c];
        sq[c] += d * d;
      }
      for (std::size_t c = 0; c < kNumClasses; ++c)
        nf.variance[c] = std::max(sq[c] / static_cast<double>(class_n[c]), var_floor);
      model.features.push_back(std::move(nf));
      continue;
    }

    if (nf.feature.kind == FeatureKind::nominal) {
      const auto& cats = train.categories[f];
      for (std::size_t k = 0; k < cats.size(); ++k) {
        nf.values.push_back(static_cast<double>(k));
        nf.value_names.push_back(cats[k]);
      }
    } else {
      std::vector<double> seen(col.begin(), col.end());
      std::sort(seen.begin(), seen.end());
      seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
      nf.values = std::move(seen);
    }
    const std::size_t k = nf.values.size();
    std::array<std::vector<std::size_t>, kNumClasses> counts;
    for (auto& v : counts) v.assign(k, 0);
    for (std::size_t i = 0; i < train.size(); ++i) {
      const double v = col(static_cast<Eigen::Index>(i));
      const auto it = std::lower_bound(nf.values.begin(), nf.values.end(), v);
      if (it == nf.values.end() || *it != v) continue;
      counts[class_index(train.labels[i])][static_cast<std::size_t>(it - nf.values.begin())]++;
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const double denom = static_cast<double>(class_n[c]) + alpha * static_cast<double>(k);
      nf.probs[c].resize(k);
      for (std::size_t v = 0; v < k; ++v)
        nf.probs[c][v] = (static_cast<double>(counts[c][v]) + alpha) / denom;
    }
    model.features.push_back(std::move(nf));
  }
  return model;
}

ClassProbs class_log_scores(const NbModel& model, std::span<const double> row) {
  if (row.size() != model.features.size()) throw Error("nb: row width mismatch");
  ClassProbs score{};
  for (std::size_t c = 0; c < kNumClasses; ++c) score[c] = std::log(model.priors[c]);
  for (std::size_t f = 0; f < model.features.size(); ++f) {
    const NbFeature& nf = model.features[f];
    const double x = row[f];
    if (!nf.categorical()) {
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double d = x - nf.mean[c];
        score[c] += -0.5 * std::log(2.0 * std::numbers::pi * nf.variance[c]) -
                    d * d / (2.0 * nf.variance[c]);
      }
      continue;
    }
    const auto it = std::lower_bound(nf.values.begin(), nf.values.end(), x);
    if (it == nf.values.end() || *it != x) continue;
    const auto v = static_cast<std::size_t>(it - nf.values.begin());
    for (std::size_t c = 0; c < kNumClasses; ++c) score[c] += std::log(nf.probs[c][v]);
  }
  return score;
}

ClassProbs posterior(const NbModel& model, std::span<const double> row) {
  const ClassProbs s = class_log_scores(model, row);
  if (!std::isfinite(s[0]) || !std::isfinite(s[1]))
    throw Error("nb: non-finite log-likelihood accumulation");
  const double m = std::max(s[0], s[1]);
  const double e0 = std::exp(s[0] - m);
  const double e1 = std::exp(s[1] - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

Prediction decide_from_log_scores(const ClassProbs& s) {
  const double m = std::max(s[0], s[1]);
  const double e0 = std::exp(s[0] - m);
  const double e1 = std::exp(s[1] - m);
  Prediction p;
  p.anomaly_probability = e1 / (e0 + e1);
  p.label = s[class_index(Label::anomaly)] > s[class_index(Label::normal)] ? Label::anomaly
                                                                           : Label::normal;
  p.confidence = p.label == Label::anomaly ? p.anomaly_probability : e0 / (e0 + e1);
  return p;
}

Prediction predict_nb(const NbModel& model, std::span<const double> row) {
  const ClassProbs s = class_log_scores(model, row);
  if (!std::isfinite(s[0]) || !std::isfinite(s[1]))
    throw Error("nb: non-finite log-likelihood accumulation");
  return decide_from_log_scores(s);
}

nlohmann::json nb_to_json(const NbModel& model) {
  nlohmann::json feats = nlohmann::json::array();
  for (const NbFeature& nf : model.features) {
    nlohmann::json j = {{"name", nf.feature.name},
                        {"kind", std::string(to_string(nf.feature.kind))}};
    if (nf.categorical()) {
      j["values"] = nf.values;
      if (!nf.value_names.empty()) j["value_names"] = nf.value_names;
      j["probs"] = {{"normal", nf.probs[0]}, {"anomaly", nf.probs[1]}};
    } else {
      j["mean"] = {{"normal", nf.mean[0]}, {"anomaly", nf.mean[1]}};
      j["variance"] = {{"normal", nf.variance[0]}, {"anomaly", nf.variance[1]}};
    }
    feats.push_back(std::move(j));
  }
  return {{"priors", {{"normal", model.priors[0]}, {"anomaly", model.priors[1]}}},
          {"alpha", model.alpha},
          {"var_floor", model.var_floor},
          {"features", std::move(feats)}};
}

NbModel nb_from_json(const nlohmann::json& j) {
  NbModel m;
  m.priors = {j.at("priors").at("normal").get<double>(), j.at("priors").at("anomaly").get<double>()};
  m.alpha = j.at("alpha").get<double>();
  m.var_floor = j.at("var_floor").get<double>();
  for (const auto& fj : j.at("features")) {
    NbFeature nf;
    nf.feature = {fj.at("name").get<std::string>(), parse_kind(fj.at("kind").get<std::string>())};
    if (nf.categorical()) {
      nf.values = fj.at("values").get<std::vector<double>>();
      if (fj.contains("value_names"))
        nf.value_names = fj.at("value_names").get<std::vector<std::string>>();
      nf.probs[0] = fj.at("probs").at("normal").get<std::vector<double>>();
      nf.probs[1] = fj.at("probs").at("anomaly").get<std::vector<double>>();
      if (nf.probs[0].size() != nf.values.size() || nf.probs[1].size() != nf.values.size())
        throw Error("nb: probability table does not match value set");
    } else {
      nf.mean = {fj.at("mean").at("normal").get<double>(), fj.at("mean").at("anomaly").get<double>()};
      nf.variance = {fj.at("variance").at("normal").get<double>(),
                     fj.at("variance").at("anomaly").get<double>()};
    }
    m.features.push_back(std::move(nf));
  }
  return m;
}

}  // namespace aptd
