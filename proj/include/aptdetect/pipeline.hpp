#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "aptdetect/bayes.hpp"
#include "aptdetect/dataset.hpp"
#include "aptdetect/mlp.hpp"
#include "aptdetect/preprocess.hpp"
#include "aptdetect/tree.hpp"

namespace aptd {

enum class ModelKind : std::uint8_t { tree, nb, mlp };

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);

// Everything needed to fit one of the three classifiers.
struct ModelSpec {
  ModelKind kind = ModelKind::tree;
  TreeParams tree;
  double nb_alpha = 1.0;
  double nb_var_floor = 1e-9;
  std::vector<MaxoutShape> mlp_hidden = std::vector<MaxoutShape>(4, MaxoutShape{50, 2});
  TrainConfig mlp;
  double mlp_train_fraction = 0.8;  // rest of the training rows is validation
};

// A classifier together with the preprocessing fitted alongside it.
struct TrainedModel {
  ModelKind kind = ModelKind::tree;
  Encoder encoder;
  std::optional<Standardizer> standardizer;  // mlp only
  std::variant<TreeModel, NbModel, MlpModel> model;
  TrainHistory history;  // mlp only

  // Predictions for `subset` (or every record) of `data`, in order.
  std::vector<Prediction> predict(const Dataset& data,
                                  std::optional<std::span<const std::size_t>> subset = std::nullopt) const;
};

// Fits encoder, standardizer (mlp) and model on `train_indices` of `data`.
// The mlp additionally holds out a stratified validation share of those rows.
TrainedModel fit_model(const Dataset& data, std::span<const std::size_t> train_indices,
                       const ModelSpec& spec, std::uint64_t seed);

std::vector<Label> labels_of(const Dataset& data);

}  // namespace aptd
