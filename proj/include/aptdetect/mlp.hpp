#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "aptdetect/bayes.hpp"
#include "aptdetect/prediction.hpp"
#include "aptdetect/preprocess.hpp"
#include "aptdetect/random.hpp"

namespace aptd {

struct MaxoutShape {
  std::size_t units = 50;
  std::size_t pieces = 2;

  bool operator==(const MaxoutShape&) const = default;
};

struct MlpArchitecture {
  std::size_t input_dim = 0;
  std::vector<MaxoutShape> hidden;
  std::size_t output_classes = kNumClasses;

  // Four Maxout layers of 50 units with 2 pieces each.
  static MlpArchitecture standard(std::size_t input_dim);

  // Input + hidden + output.
  std::size_t layer_count() const { return hidden.size() + 2; }
  bool operator==(const MlpArchitecture&) const = default;
};

// Unit j outputs max_p (x . weights[p].col(j) + biases[p](j)).
struct MaxoutLayer {
  std::vector<Eigen::MatrixXd> weights;     // per piece: fan_in x units
  std::vector<Eigen::RowVectorXd> biases;   // per piece: units

  std::size_t pieces() const { return weights.size(); }
  std::size_t fan_in() const { return static_cast<std::size_t>(weights.front().rows()); }
  std::size_t units() const { return static_cast<std::size_t>(weights.front().cols()); }
};

struct MlpModel {
  MlpArchitecture arch;
  std::vector<MaxoutLayer> hidden;
  Eigen::MatrixXd out_weights;   // last hidden width x classes
  Eigen::RowVectorXd out_bias;   // classes
  std::uint64_t seed = 0;
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double input_dropout = 0.0;
  double hidden_dropout = 0.0;
  double max_grad_norm = 0.0;  // global L2 norm cap per batch; 0 disables
  std::uint64_t seed = 0;
};

struct EpochStats {
  double train_loss = 0.0;
  double validation_loss = 0.0;      // NaN without validation rows
  double validation_accuracy = 0.0;  // NaN without validation rows
};

using TrainHistory = std::vector<EpochStats>;

// Glorot-uniform weights, zero biases. Throws on zero-width layers.
MlpModel init_network(const MlpArchitecture& arch, std::uint64_t seed);

struct MaxoutActivation {
  Eigen::RowVectorXd values;
  std::vector<int> argmax;  // winning piece per unit
};

MaxoutActivation maxout_forward(const MaxoutLayer& layer, std::span<const double> input);

// Row-wise softmax with max subtraction.
RowMatrix softmax_rows(const RowMatrix& logits);

// Class probabilities of one row / every row. Throws on non-finite values.
ClassProbs forward(const MlpModel& model, std::span<const double> row);
RowMatrix forward_batch(const MlpModel& model, const RowMatrix& rows);

// Parameter-shaped container for gradients and momentum buffers.
struct MlpGradients {
  std::vector<MaxoutLayer> hidden;
  Eigen::MatrixXd out_weights;
  Eigen::RowVectorXd out_bias;

  static MlpGradients zeros_like(const MlpModel& model);
};

// Mean cross-entropy of the batch and its gradient with respect to every
// parameter. A Maxout unit passes gradient only to its winning piece.
std::pair<double, MlpGradients> loss_and_gradients(const MlpModel& model, const RowMatrix& batch,
                                                   std::span<const Label> labels);

// Mini-batch gradient descent with classical momentum for config.epochs
// passes; batches are reshuffled every epoch. Returns the last-epoch model.
std::pair<MlpModel, TrainHistory> train_mlp(const EncodedMatrix& train,
                                            const EncodedMatrix& validation,
                                            const MlpArchitecture& arch,
                                            const TrainConfig& config);

// Argmax of forward(); ties go to normal.
Prediction predict_mlp(const MlpModel& model, std::span<const double> row);
Prediction decide_from_probs(const ClassProbs& probs);

nlohmann::json mlp_to_json(const MlpModel& model);
MlpModel mlp_from_json(const nlohmann::json& j);

void write_history_csv(std::ostream& out, const TrainHistory& history);

}  // namespace aptd
