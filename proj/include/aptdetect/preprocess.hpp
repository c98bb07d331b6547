#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "aptdetect/dataset.hpp"

namespace aptd {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ColumnKind : std::uint8_t { numeric, binary, one_hot };

// Maps records to a fixed-width numeric layout: numeric and binary features
// pass through, each nominal feature expands to one column per category seen
// at fit time ("feature.value"). Columns follow schema order.
class Encoder {
 public:
  Encoder() = default;
  Encoder(FeatureSchema schema, std::vector<std::vector<std::string>> categories);

  const FeatureSchema& schema() const { return schema_; }
  // Category list of the i-th nominal slot, in first-seen order.
  const std::vector<std::vector<std::string>>& categories() const { return categories_; }

  std::size_t width() const { return column_names_.size(); }
  const std::vector<std::string>& column_names() const { return column_names_; }
  const std::vector<ColumnKind>& column_kinds() const { return column_kinds_; }
  // First encoded column of schema feature f.
  std::size_t column_of(std::size_t feature) const { return feature_offset_[feature]; }

  // Category code of a nominal value, or -1 when unseen at fit time.
  int code(std::size_t nominal_slot, const std::string& value) const;

 private:
  FeatureSchema schema_;
  std::vector<std::vector<std::string>> categories_;
  std::vector<std::unordered_map<std::string, int>> lookup_;
  std::vector<std::string> column_names_;
  std::vector<ColumnKind> column_kinds_;
  std::vector<std::size_t> feature_offset_;
};

struct EncodedMatrix {
  RowMatrix rows;
  std::vector<Label> labels;
  std::vector<std::string> column_names;
  std::vector<ColumnKind> column_kinds;

  std::size_t size() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t width() const { return static_cast<std::size_t>(rows.cols()); }
};

// Fitted on `subset` when given, otherwise on every record.
Encoder fit_encoder(const Dataset& train,
                    std::optional<std::span<const std::size_t>> subset = std::nullopt);

EncodedMatrix encode(const Encoder& encoder, const Dataset& data,
                     std::optional<std::span<const std::size_t>> subset = std::nullopt);

// Per-column z-scoring of numeric columns (population standard deviation).
// Binary and one-hot columns, and columns with zero spread, pass through.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> active;

  std::size_t width() const { return mean.size(); }
};

Standardizer fit_standardizer(const EncodedMatrix& train_rows);
EncodedMatrix standardize(const Standardizer& s, EncodedMatrix m);
void standardize_rows(const Standardizer& s, RowMatrix& rows);

void write_encoded_csv(std::ostream& out, const EncodedMatrix& m);

// Raw-feature view for the tree and Bayes models: one column per schema
// feature; nominal columns hold the encoder's category code (-1 = unseen).
struct MixedTable {
  std::vector<Feature> columns;
  std::vector<std::vector<std::string>> categories;  // per column, empty unless nominal
  RowMatrix values;
  std::vector<Label> labels;

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t width() const { return columns.size(); }
};

MixedTable tabulate(const Encoder& encoder, const Dataset& data,
                    std::optional<std::span<const std::size_t>> subset = std::nullopt);

}  // namespace aptd
