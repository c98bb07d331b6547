#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "aptdetect/prediction.hpp"
#include "aptdetect/preprocess.hpp"

namespace aptd {

using ClassProbs = std::array<double, kNumClasses>;

// Conditional likelihood of one feature given the class.
struct NbFeature {
  Feature feature;
  // Numeric features: Gaussian per class.
  ClassProbs mean{};
  ClassProbs variance{};
  // Binary and nominal features: value set fitted from training data and
  // smoothed per-class probabilities over it. Nominal values are encoder
  // category codes; `value_names` carries their text.
  std::vector<double> values;
  std::vector<std::string> value_names;
  std::array<std::vector<double>, kNumClasses> probs;

  bool categorical() const { return feature.kind != FeatureKind::numeric; }
};

struct NbModel {
  ClassProbs priors{};
  std::vector<NbFeature> features;
  double alpha = 1.0;
  double var_floor = 1e-9;
};

// Throws when the training set lacks either class.
NbModel fit_nb(const MixedTable& train, double alpha = 1.0, double var_floor = 1e-9);

// log P(c) + sum_f log P(x_f | c) per class. Categorical values outside the
// fitted value set contribute nothing to either class.
ClassProbs class_log_scores(const NbModel& model, std::span<const double> row);

// Normalized class posterior. Throws when the accumulation is not finite.
ClassProbs posterior(const NbModel& model, std::span<const double> row);

// Argmax of a log-score vector; ties go to normal.
Prediction decide_from_log_scores(const ClassProbs& log_scores);

Prediction predict_nb(const NbModel& model, std::span<const double> row);

nlohmann::json nb_to_json(const NbModel& model);
NbModel nb_from_json(const nlohmann::json& j);

}  // namespace aptd
