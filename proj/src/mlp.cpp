#include "aptdetect/mlp.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include "aptdetect/dataset.hpp"
#include "aptdetect/error.hpp"

namespace aptd {

namespace {

using Matrix = Eigen::MatrixXd;
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

struct Dropout {
  double input = 0.0;
  double hidden = 0.0;
  Rng* rng = nullptr;
};

// Forward state kept for backpropagation.
struct Trace {
  std::vector<Matrix> inputs;        // input to each hidden layer, then to the output layer
  std::vector<IndexMatrix> winners;  // per hidden layer
  std::vector<Matrix> masks;         // per hidden layer input; empty when no dropout
  Matrix logits;
};

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  Matrix mask(rows, cols);
  const double keep = 1.0 - rate;
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return mask;
}

void maxout_batch(const MaxoutLayer& layer, const Matrix& in, Matrix& out, IndexMatrix& win) {
  out = (in * layer.weights[0]).rowwise() + layer.biases[0];
  win = IndexMatrix::Zero(out.rows(), out.cols());
  for (std::size_t p = 1; p < layer.pieces(); ++p) {
    const Matrix z = (in * layer.weights[p]).rowwise() + layer.biases[p];
    // Materialized: `out` changes below.
    const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> better = z.array() > out.array();
    win = better.select(IndexMatrix::Constant(out.rows(), out.cols(), static_cast<int>(p)), win);
    out = better.select(z, out);
  }
}

Trace run_forward(const MlpModel& model, const Matrix& x, const Dropout& drop) {
  Trace t;
  Matrix a = x;
  for (std::size_t l = 0; l < model.hidden.size(); ++l) {
    const double rate = l == 0 ? drop.input : drop.hidden;
    if (drop.rng != nullptr && rate > 0.0) {
      t.masks.push_back(dropout_mask(a.rows(), a.cols(), rate, *drop.rng));
      a = a.cwiseProduct(t.masks.back());
    } else {
      t.masks.emplace_back();
    }
    t.inputs.push_back(std::move(a));
    Matrix h;
    IndexMatrix win;
    maxout_batch(model.hidden[l], t.inputs.back(), h, win);
    t.winners.push_back(std::move(win));
    a = std::move(h);
  }
  if (drop.rng != nullptr && drop.hidden > 0.0 && !model.hidden.empty()) {
    t.masks.push_back(dropout_mask(a.rows(), a.cols(), drop.hidden, *drop.rng));
    a = a.cwiseProduct(t.masks.back());
  } else {
    t.masks.emplace_back();
  }
  t.inputs.push_back(std::move(a));
  t.logits = (t.inputs.back() * model.out_weights).rowwise() + model.out_bias;
  return t;
}

Matrix log_softmax(const Matrix& logits) {
  const Eigen::VectorXd m = logits.rowwise().maxCoeff();
  const Matrix shifted = logits.colwise() - m;
  const Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log().matrix();
  return shifted.colwise() - lse;
}

std::pair<double, MlpGradients> loss_grad(const MlpModel& model, const Matrix& x,
                                          std::span<const Label> labels, const Dropout& drop) {
  const auto n = x.rows();
  const Trace t = run_forward(model, x, drop);
  const Matrix logp = log_softmax(t.logits);
  double loss = 0.0;
  Matrix delta = logp.array().exp().matrix();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(class_index(labels[static_cast<std::size_t>(i)]));
    loss -= logp(i, c);
    delta(i, c) -= 1.0;
  }
  loss /= static_cast<double>(n);
  delta /= static_cast<double>(n);

  MlpGradients g;
  g.out_weights = t.inputs.back().transpose() * delta;
  g.out_bias = delta.colwise().sum();
  Matrix upstream = delta * model.out_weights.transpose();
  if (t.masks.back().size() != 0) upstream = upstream.cwiseProduct(t.masks.back());

  g.hidden.resize(model.hidden.size());
  for (std::size_t l = model.hidden.size(); l-- > 0;) {
    const MaxoutLayer& layer = model.hidden[l];
    MaxoutLayer& gl = g.hidden[l];
    const Matrix& in = t.inputs[l];
    Matrix down = Matrix::Zero(in.rows(), in.cols());
    for (std::size_t p = 0; p < layer.pieces(); ++p) {
      const Matrix dz =
          (t.winners[l].array() == static_cast<int>(p)).select(upstream, Matrix::Zero(upstream.rows(), upstream.cols()));
      gl.weights.push_back(in.transpose() * dz);
      gl.biases.push_back(dz.colwise().sum());
      if (l > 0) down.noalias() += dz * layer.weights[p].transpose();
    }
    if (l > 0) {
      upstream = std::move(down);
      if (t.masks[l].size() != 0) upstream = upstream.cwiseProduct(t.masks[l]);
    }
  }
  return {loss, std::move(g)};
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

void clip_gradients(MlpGradients& g, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = g.out_weights.squaredNorm() + g.out_bias.squaredNorm();
  for (const MaxoutLayer& l : g.hidden)
    for (std::size_t p = 0; p < l.pieces(); ++p) sq += l.weights[p].squaredNorm() + l.biases[p].squaredNorm();
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm)) return;
  const double scale = max_norm / norm;
  g.out_weights *= scale;
  g.out_bias *= scale;
  for (MaxoutLayer& l : g.hidden)
    for (std::size_t p = 0; p < l.pieces(); ++p) {
      l.weights[p] *= scale;
      l.biases[p] *= scale;
    }
}

Matrix to_matrix(std::span<const double> row) {
  Matrix x(1, static_cast<Eigen::Index>(row.size()));
  for (std::size_t i = 0; i < row.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = row[i];
  return x;
}

}  // namespace

MlpArchitecture MlpArchitecture::standard(std::size_t input_dim) {
  return MlpArchitecture{input_dim, std::vector<MaxoutShape>(4, MaxoutShape{50, 2}), kNumClasses};
}

MlpModel init_network(const MlpArchitecture& arch, std::uint64_t seed) {
  if (arch.input_dim == 0) throw Error("init_network: zero input width");
  if (arch.output_classes != kNumClasses) throw Error("init_network: output must have 2 classes");
  for (const MaxoutShape& s : arch.hidden)
    if (s.units == 0 || s.pieces == 0) throw Error("init_network: zero-width hidden layer");

  Rng rng(seed);
  MlpModel m;
  m.arch = arch;
  m.seed = seed;
  auto fill = [&rng](Matrix& w, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    w.resize(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
  };
  std::size_t fan_in = arch.input_dim;
  for (const MaxoutShape& s : arch.hidden) {
    MaxoutLayer layer;
    for (std::size_t p = 0; p < s.pieces; ++p) {
      Matrix w;
      fill(w, fan_in, s.units);
      layer.weights.push_back(std::move(w));
      layer.biases.push_back(Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(s.units)));
    }
    m.hidden.push_back(std::move(layer));
    fan_in = s.units;
  }
  fill(m.out_weights, fan_in, arch.output_classes);
  m.out_bias = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(arch.output_classes));
  return m;
}

MaxoutActivation maxout_forward(const MaxoutLayer& layer, std::span<const double> input) {
  if (input.size() != layer.fan_in()) throw Error("maxout_forward: input width mismatch");
  Matrix out;
  IndexMatrix win;
  maxout_batch(layer, to_matrix(input), out, win);
  MaxoutActivation a;
  a.values = out.row(0);
  a.argmax.assign(win.data(), win.data() + win.size());
  return a;
}

RowMatrix softmax_rows(const RowMatrix& logits) {
  const Matrix lp = log_softmax(logits);
  return lp.array().exp().matrix();
}

RowMatrix forward_batch(const MlpModel& model, const RowMatrix& rows) {
  if (static_cast<std::size_t>(rows.cols()) != model.arch.input_dim)
    throw Error("mlp: input width " + std::to_string(rows.cols()) + ", model expects " +
                std::to_string(model.arch.input_dim));
  RowMatrix probs(rows.rows(), static_cast<Eigen::Index>(kNumClasses));
  constexpr Eigen::Index kChunk = 4096;
  for (Eigen::Index start = 0; start < rows.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, rows.rows() - start);
    const Matrix x = rows.middleRows(start, len);
    const Trace t = run_forward(model, x, {});
    if (!all_finite(t.logits)) throw Error("mlp: non-finite activation in forward pass");
    probs.middleRows(start, len) = log_softmax(t.logits).array().exp().matrix();
  }
  return probs;
}

ClassProbs forward(const MlpModel& model, std::span<const double> row) {
  RowMatrix x(1, static_cast<Eigen::Index>(row.size()));
  for (std::size_t i = 0; i < row.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = row[i];
  const RowMatrix p = forward_batch(model, x);
  return {p(0, 0), p(0, 1)};
}

MlpGradients MlpGradients::zeros_like(const MlpModel& model) {
  MlpGradients g;
  for (const MaxoutLayer& layer : model.hidden) {
    MaxoutLayer z;
    for (std::size_t p = 0; p < layer.pieces(); ++p) {
      z.weights.push_back(Matrix::Zero(layer.weights[p].rows(), layer.weights[p].cols()));
      z.biases.push_back(Eigen::RowVectorXd::Zero(layer.biases[p].size()));
    }
    g.hidden.push_back(std::move(z));
  }
  g.out_weights = Matrix::Zero(model.out_weights.rows(), model.out_weights.cols());
  g.out_bias = Eigen::RowVectorXd::Zero(model.out_bias.size());
  return g;
}

std::pair<double, MlpGradients> loss_and_gradients(const MlpModel& model, const RowMatrix& batch,
                                                   std::span<const Label> labels) {
  if (batch.rows() == 0) throw Error("loss_and_gradients: empty batch");
  if (static_cast<std::size_t>(batch.rows()) != labels.size())
    throw Error("loss_and_gradients: label count mismatch");
  return loss_grad(model, Matrix(batch), labels, {});
}

std::pair<MlpModel, TrainHistory> train_mlp(const EncodedMatrix& train,
                                            const EncodedMatrix& validation,
                                            const MlpArchitecture& arch,
                                            const TrainConfig& config) {
  if (config.epochs < 1) throw Error("train_mlp: epochs must be >= 1");
  if (config.batch_size < 1) throw Error("train_mlp: batch_size must be >= 1");
  if (!(config.learning_rate > 0.0)) throw Error("train_mlp: learning_rate must be > 0");
  if (!(config.momentum >= 0.0 && config.momentum < 1.0))
    throw Error("train_mlp: momentum must be in [0, 1)");
  if (!(config.input_dropout >= 0.0 && config.input_dropout < 1.0) ||
      !(config.hidden_dropout >= 0.0 && config.hidden_dropout < 1.0))
    throw Error("train_mlp: dropout rates must be in [0, 1)");
  if (!(config.max_grad_norm >= 0.0)) throw Error("train_mlp: max_grad_norm must be >= 0");
  if (train.size() == 0) throw Error("train_mlp: empty training set");
  if (train.width() != arch.input_dim || (validation.size() > 0 && validation.width() != arch.input_dim))
    throw Error("train_mlp: matrix width does not match the architecture");

  MlpModel model = init_network(arch, derive_seed(config.seed, 0));
  MlpGradients velocity = MlpGradients::zeros_like(model);
  Rng shuffle_rng(derive_seed(config.seed, 1));
  Rng dropout_rng(derive_seed(config.seed, 2));
  const Dropout drop{config.input_dropout, config.hidden_dropout, &dropout_rng};

  const std::size_t n = train.size();
  const auto d = static_cast<Eigen::Index>(train.width());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Label> batch_labels;
  Matrix batch;

  TrainHistory history;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_no) {
      const std::size_t len = std::min(config.batch_size, n - start);
      batch.resize(static_cast<Eigen::Index>(len), d);
      batch_labels.resize(len);
      for (std::size_t k = 0; k < len; ++k) {
        batch.row(static_cast<Eigen::Index>(k)) = train.rows.row(static_cast<Eigen::Index>(order[start + k]));
        batch_labels[k] = train.labels[order[start + k]];
      }
      auto [loss, grad] = loss_grad(model, batch, batch_labels, drop);
      if (!std::isfinite(loss))
        throw Error("train_mlp: loss diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                    std::to_string(batch_no + 1));
      loss_sum += loss * static_cast<double>(len);
      clip_gradients(grad, config.max_grad_norm);

      const double mu = config.momentum;
      const double lr = config.learning_rate;
      // velocity = mu * velocity - lr * grad; params += velocity
      for (std::size_t l = 0; l < grad.hidden.size(); ++l) {
        for (std::size_t p = 0; p < grad.hidden[l].pieces(); ++p) {
          MaxoutLayer& vl = velocity.hidden[l];
          vl.weights[p] = mu * vl.weights[p] - lr * grad.hidden[l].weights[p];
          vl.biases[p] = mu * vl.biases[p] - lr * grad.hidden[l].biases[p];
          model.hidden[l].weights[p] += vl.weights[p];
          model.hidden[l].biases[p] += vl.biases[p];
        }
      }
      velocity.out_weights = mu * velocity.out_weights - lr * grad.out_weights;
      velocity.out_bias = mu * velocity.out_bias - lr * grad.out_bias;
      model.out_weights += velocity.out_weights;
      model.out_bias += velocity.out_bias;
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(n);
    stats.validation_loss = std::numeric_limits<double>::quiet_NaN();
    stats.validation_accuracy = std::numeric_limits<double>::quiet_NaN();
    if (validation.size() > 0) {
      const RowMatrix probs = forward_batch(model, validation.rows);
      double vloss = 0.0;
      std::size_t correct = 0;
      for (std::size_t i = 0; i < validation.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const std::size_t c = class_index(validation.labels[i]);
        vloss -= std::log(std::max(probs(row, static_cast<Eigen::Index>(c)), 1e-300));
        const Prediction p = decide_from_probs({probs(row, 0), probs(row, 1)});
        if (p.label == validation.labels[i]) ++correct;
      }
      stats.validation_loss = vloss / static_cast<double>(validation.size());
      stats.validation_accuracy = static_cast<double>(correct) / static_cast<double>(validation.size());
    }
    history.push_back(stats);
  }
  return {std::move(model), std::move(history)};
}

Prediction decide_from_probs(const ClassProbs& probs) {
  Prediction p;
  p.anomaly_probability = probs[class_index(Label::anomaly)];
  p.label = probs[class_index(Label::anomaly)] > probs[class_index(Label::normal)] ? Label::anomaly
                                                                                   : Label::normal;
  p.confidence = probs[class_index(p.label)];
  return p;
}

Prediction predict_mlp(const MlpModel& model, std::span<const double> row) {
  return decide_from_probs(forward(model, row));
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(std::move(r));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols) {
  if (j.size() != rows) throw Error("mlp: weight matrix has wrong row count");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto r = j.at(i).get<std::vector<double>>();
    if (r.size() != cols) throw Error("mlp: weight matrix has wrong column count");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = r[c];
  }
  return m;
}

Eigen::RowVectorXd vector_from_json(const nlohmann::json& j, std::size_t n) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != n) throw Error("mlp: bias vector has wrong length");
  return Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(n));
}

std::vector<double> to_vector(const Eigen::RowVectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

nlohmann::json mlp_to_json(const MlpModel& model) {
  nlohmann::json hidden_arch = nlohmann::json::array();
  for (const MaxoutShape& s : model.arch.hidden)
    hidden_arch.push_back({{"units", s.units}, {"pieces", s.pieces}});
  nlohmann::json layers = nlohmann::json::array();
  for (const MaxoutLayer& layer : model.hidden) {
    nlohmann::json pieces = nlohmann::json::array();
    for (std::size_t p = 0; p < layer.pieces(); ++p)
      pieces.push_back({{"weights", matrix_to_json(layer.weights[p])},
                        {"bias", to_vector(layer.biases[p])}});
    layers.push_back(std::move(pieces));
  }
  return {{"architecture",
           {{"input_dim", model.arch.input_dim},
            {"hidden", std::move(hidden_arch)},
            {"output_classes", model.arch.output_classes}}},
          {"seed", model.seed},
          {"hidden", std::move(layers)},
          {"output", {{"weights", matrix_to_json(model.out_weights)},
                      {"bias", to_vector(model.out_bias)}}}};
}

MlpModel mlp_from_json(const nlohmann::json& j) {
  MlpModel m;
  const auto& a = j.at("architecture");
  m.arch.input_dim = a.at("input_dim").get<std::size_t>();
  m.arch.output_classes = a.at("output_classes").get<std::size_t>();
  for (const auto& s : a.at("hidden"))
    m.arch.hidden.push_back({s.at("units").get<std::size_t>(), s.at("pieces").get<std::size_t>()});
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto& layers = j.at("hidden");
  if (layers.size() != m.arch.hidden.size()) throw Error("mlp: layer count mismatch");
  std::size_t fan_in = m.arch.input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const MaxoutShape& s = m.arch.hidden[l];
    if (layers[l].size() != s.pieces) throw Error("mlp: piece count mismatch");
    MaxoutLayer layer;
    for (const auto& piece : layers[l]) {
      layer.weights.push_back(matrix_from_json(piece.at("weights"), fan_in, s.units));
      layer.biases.push_back(vector_from_json(piece.at("bias"), s.units));
    }
    m.hidden.push_back(std::move(layer));
    fan_in = s.units;
  }
  m.out_weights = matrix_from_json(j.at("output").at("weights"), fan_in, m.arch.output_classes);
  m.out_bias = vector_from_json(j.at("output").at("bias"), m.arch.output_classes);
  return m;
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
  out << "epoch,train_loss,validation_loss,validation_accuracy\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    out << e + 1 << ',' << format_number(history[e].train_loss) << ','
        << format_number(history[e].validation_loss) << ','
        << format_number(history[e].validation_accuracy) << '\n';
}

}  // namespace aptd
