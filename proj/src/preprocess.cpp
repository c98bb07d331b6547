#include "aptdetect/preprocess.hpp"

#include <cmath>
#include <ostream>

#include "aptdetect/error.hpp"

namespace aptd {

namespace {

template <typename F>
void for_each_index(const Dataset& data, std::optional<std::span<const std::size_t>> subset,
                    F&& f) {
  if (subset) {
    for (std::size_t i = 0; i < subset->size(); ++i) f(i, data.records[(*subset)[i]]);
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) f(i, data.records[i]);
  }
}

std::size_t count(const Dataset& data, std::optional<std::span<const std::size_t>> subset) {
  return subset ? subset->size() : data.size();
}

}  // namespace

Encoder::Encoder(FeatureSchema schema, std::vector<std::vector<std::string>> categories)
    : schema_(std::move(schema)), categories_(std::move(categories)) {
  if (categories_.size() != schema_.nominal_count())
    throw Error("encoder: category lists do not match the schema's nominal features");
  lookup_.resize(categories_.size());
  for (std::size_t s = 0; s < categories_.size(); ++s)
    for (std::size_t c = 0; c < categories_[s].size(); ++c)
      lookup_[s].emplace(categories_[s][c], static_cast<int>(c));

  feature_offset_.resize(schema_.size());
  for (std::size_t f = 0; f < schema_.size(); ++f) {
    const Feature& feat = schema_[f];
    feature_offset_[f] = column_names_.size();
    switch (feat.kind) {
      case FeatureKind::numeric:
        column_names_.push_back(feat.name);
        column_kinds_.push_back(ColumnKind::numeric);
        break;
      case FeatureKind::categorical_binary:
        column_names_.push_back(feat.name);
        column_kinds_.push_back(ColumnKind::binary);
        break;
      case FeatureKind::nominal:
        for (const std::string& value : categories_[schema_.slot(f)]) {
          column_names_.push_back(feat.name + "." + value);
          column_kinds_.push_back(ColumnKind::one_hot);
        }
        break;
    }
  }
}

int Encoder::code(std::size_t nominal_slot, const std::string& value) const {
  const auto& map = lookup_[nominal_slot];
  const auto it = map.find(value);
  return it == map.end() ? -1 : it->second;
}

Encoder fit_encoder(const Dataset& train, std::optional<std::span<const std::size_t>> subset) {
  if (count(train, subset) == 0) throw Error("fit_encoder: empty training set");
  const FeatureSchema& schema = train.schema;
  std::vector<std::vector<std::string>> categories(schema.nominal_count());
  std::vector<std::unordered_map<std::string, int>> seen(schema.nominal_count());
  for_each_index(train, subset, [&](std::size_t, const Record& r) {
    for (std::size_t s = 0; s < r.text.size(); ++s) {
      if (seen[s].emplace(r.text[s], static_cast<int>(categories[s].size())).second)
        categories[s].push_back(r.text[s]);
    }
  });
  return Encoder(schema, std::move(categories));
}

EncodedMatrix encode(const Encoder& encoder, const Dataset& data,
                     std::optional<std::span<const std::size_t>> subset) {
  const FeatureSchema& schema = encoder.schema();
  if (!(schema == data.schema)) throw Error("encode: dataset schema differs from encoder schema");
  EncodedMatrix m;
  m.rows = RowMatrix::Zero(static_cast<Eigen::Index>(count(data, subset)),
                           static_cast<Eigen::Index>(encoder.width()));
  m.labels.resize(count(data, subset));
  m.column_names = encoder.column_names();
  m.column_kinds = encoder.column_kinds();
  for_each_index(data, subset, [&](std::size_t i, const Record& r) {
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const auto col = static_cast<Eigen::Index>(encoder.column_of(f));
      const std::size_t slot = schema.slot(f);
      if (schema[f].kind == FeatureKind::nominal) {
        const int c = encoder.code(slot, r.text[slot]);
        if (c >= 0) m.rows(row, col + c) = 1.0;
      } else {
        m.rows(row, col) = r.numeric[slot];
      }
    }
    m.labels[i] = r.label;
  });
  return m;
}

Standardizer fit_standardizer(const EncodedMatrix& train_rows) {
  const std::size_t d = train_rows.width();
  const auto n = static_cast<double>(train_rows.size());
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0),
                 std::vector<bool>(d, false)};
  if (train_rows.size() == 0) return s;
  for (std::size_t c = 0; c < d; ++c) {
    if (train_rows.column_kinds[c] != ColumnKind::numeric) continue;
    const auto col = train_rows.rows.col(static_cast<Eigen::Index>(c));
    const double mean = col.sum() / n;
    const double var = (col.array() - mean).square().sum() / n;
    s.mean[c] = mean;
    if (var > 0.0) {
      s.stddev[c] = std::sqrt(var);
      s.active[c] = true;
    }
  }
  return s;
}

void standardize_rows(const Standardizer& s, RowMatrix& rows) {
  if (static_cast<std::size_t>(rows.cols()) != s.width())
    throw Error("standardize: width mismatch");
  for (std::size_t c = 0; c < s.width(); ++c) {
    if (!s.active[c]) continue;
    auto col = rows.col(static_cast<Eigen::Index>(c));
    col = (col.array() - s.mean[c]) / s.stddev[c];
  }
}

EncodedMatrix standardize(const Standardizer& s, EncodedMatrix m) {
  standardize_rows(s, m.rows);
  return m;
}

void write_encoded_csv(std::ostream& out, const EncodedMatrix& m) {
  for (const std::string& name : m.column_names) out << name << ',';
  out << "label\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t c = 0; c < m.width(); ++c)
      out << format_number(m.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)))
          << ',';
    out << to_string(m.labels[i]) << '\n';
  }
}

MixedTable tabulate(const Encoder& encoder, const Dataset& data,
                    std::optional<std::span<const std::size_t>> subset) {
  const FeatureSchema& schema = encoder.schema();
  if (!(schema == data.schema)) throw Error("tabulate: dataset schema differs from encoder schema");
  MixedTable t;
  t.columns = schema.features();
  t.categories.resize(schema.size());
  for (std::size_t f = 0; f < schema.size(); ++f)
    if (schema[f].kind == FeatureKind::nominal)
      t.categories[f] = encoder.categories()[schema.slot(f)];
  t.values.resize(static_cast<Eigen::Index>(count(data, subset)),
                  static_cast<Eigen::Index>(schema.size()));
  t.labels.resize(count(data, subset));
  for_each_index(data, subset, [&](std::size_t i, const Record& r) {
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const std::size_t slot = schema.slot(f);
      t.values(row, static_cast<Eigen::Index>(f)) =
          schema[f].kind == FeatureKind::nominal ? encoder.code(slot, r.text[slot])
                                                 : r.numeric[slot];
    }
    t.labels[i] = r.label;
  });
  return t;
}

}  // namespace aptd
