#pragma once

#include "aptdetect/schema.hpp"

namespace aptd {

// Output of any of the three classifiers for one row.
struct Prediction {
  Label label = Label::normal;
  double confidence = 0.0;           // probability assigned to `label`
  double anomaly_probability = 0.0;  // score used for ROC and lift charts
};

}  // namespace aptd
