#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aptdetect/mlp.hpp"

namespace aptd {

struct ImportanceRow {
  std::string variable;
  double relative = 0.0;    // raw / max raw
  double scaled = 0.0;      // equal to relative
  double percentage = 0.0;  // raw / sum raw, as a fraction
};

struct ImportanceTable {
  std::vector<ImportanceRow> rows;  // descending by relative, ties by name
};

// Raw connection-weight importance of each input column. Starting from a
// magnitude of 1 per output class, every layer's unit magnitude is the sum
// over its outgoing connections of |weight| times the receiving unit's
// magnitude; Maxout pieces are combined by the elementwise max of |weight|.
// The input column's raw importance is that same sum at the first layer.
std::vector<double> raw_importance(const MlpModel& model);

// Throws when the model has non-finite parameters or the names do not match
// its input width.
ImportanceTable variable_importance(const MlpModel& model,
                                    std::span<const std::string> column_names);

enum class ImportanceFormat { text, csv };

// Variable, relative, scaled and percentage columns with six decimals. The
// text form is whitespace-aligned under a "Variable Importances:" title.
void emit_importance(std::ostream& out, const ImportanceTable& table,
                     ImportanceFormat format = ImportanceFormat::text);

ImportanceTable parse_importance(std::istream& in, ImportanceFormat format = ImportanceFormat::text);

}  // namespace aptd
