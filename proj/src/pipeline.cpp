#include "aptdetect/pipeline.hpp"

#include "aptdetect/cv.hpp"
#include "aptdetect/error.hpp"

namespace aptd {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::tree: return "tree";
    case ModelKind::nb: return "nb";
    case ModelKind::mlp: return "mlp";
  }
  return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  if (name == "tree") return ModelKind::tree;
  if (name == "nb") return ModelKind::nb;
  if (name == "mlp") return ModelKind::mlp;
  return std::nullopt;
}

std::vector<Label> labels_of(const Dataset& data) {
  std::vector<Label> labels;
  labels.reserve(data.size());
  for (const Record& r : data.records) labels.push_back(r.label);
  return labels;
}

TrainedModel fit_model(const Dataset& data, std::span<const std::size_t> train_indices,
                       const ModelSpec& spec, std::uint64_t seed) {
  TrainedModel out;
  out.kind = spec.kind;
  out.encoder = fit_encoder(data, train_indices);

  switch (spec.kind) {
    case ModelKind::tree:
      out.model = train_tree(tabulate(out.encoder, data, train_indices), spec.tree);
      break;
    case ModelKind::nb:
      out.model = fit_nb(tabulate(out.encoder, data, train_indices), spec.nb_alpha, spec.nb_var_floor);
      break;
    case ModelKind::mlp: {
      EncodedMatrix all = encode(out.encoder, data, train_indices);
      out.standardizer = fit_standardizer(all);
      standardize_rows(*out.standardizer, all.rows);

      // Positions within `all`, which follows train_indices order.
      std::vector<std::size_t> positions(train_indices.size());
      for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
      auto [fit_pos, val_pos] =
          holdout_split(positions, all.labels, spec.mlp_train_fraction, derive_seed(seed, 7));
      auto take = [&all](const std::vector<std::size_t>& pos) {
        EncodedMatrix m;
        m.column_names = all.column_names;
        m.column_kinds = all.column_kinds;
        m.rows.resize(static_cast<Eigen::Index>(pos.size()), all.rows.cols());
        m.labels.resize(pos.size());
        for (std::size_t i = 0; i < pos.size(); ++i) {
          m.rows.row(static_cast<Eigen::Index>(i)) = all.rows.row(static_cast<Eigen::Index>(pos[i]));
          m.labels[i] = all.labels[pos[i]];
        }
        return m;
      };
      const EncodedMatrix fit_rows = take(fit_pos);
      const EncodedMatrix val_rows = take(val_pos);
      all = EncodedMatrix{};

      MlpArchitecture arch{out.encoder.width(), spec.mlp_hidden, kNumClasses};
      TrainConfig cfg = spec.mlp;
      cfg.seed = derive_seed(seed, 11);
      auto [model, history] = train_mlp(fit_rows, val_rows, arch, cfg);
      out.model = std::move(model);
      out.history = std::move(history);
      break;
    }
  }
  return out;
}

std::vector<Prediction> TrainedModel::predict(const Dataset& data,
                                              std::optional<std::span<const std::size_t>> subset) const {
  std::vector<Prediction> preds;
  switch (kind) {
    case ModelKind::tree:
    case ModelKind::nb: {
      const MixedTable t = tabulate(encoder, data, subset);
      preds.reserve(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) {
        const auto row = t.values.row(static_cast<Eigen::Index>(i));
        const std::span<const double> values(row.data(), static_cast<std::size_t>(row.size()));
        preds.push_back(kind == ModelKind::tree ? predict_tree(std::get<TreeModel>(model), values)
                                                : predict_nb(std::get<NbModel>(model), values));
      }
      break;
    }
    case ModelKind::mlp: {
      EncodedMatrix m = encode(encoder, data, subset);
      if (standardizer) standardize_rows(*standardizer, m.rows);
      const RowMatrix probs = forward_batch(std::get<MlpModel>(model), m.rows);
      preds.reserve(m.size());
      for (Eigen::Index i = 0; i < probs.rows(); ++i)
        preds.push_back(decide_from_probs({probs(i, 0), probs(i, 1)}));
      break;
    }
  }
  return preds;
}

}  // namespace aptd
