#include "aptdetect/importance.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "aptdetect/error.hpp"

namespace aptd {

namespace {

// |W| collapsed over Maxout pieces: fan_in x units.
Eigen::MatrixXd abs_max_over_pieces(const MaxoutLayer& layer) {
  Eigen::MatrixXd a = layer.weights[0].cwiseAbs();
  for (std::size_t p = 1; p < layer.pieces(); ++p) a = a.cwiseMax(layer.weights[p].cwiseAbs());
  return a;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::vector<double> raw_importance(const MlpModel& model) {
  auto finite = [](const auto& m) { return m.allFinite(); };
  bool ok = finite(model.out_weights) && finite(model.out_bias);
  for (const MaxoutLayer& l : model.hidden)
    for (std::size_t p = 0; p < l.pieces(); ++p) ok = ok && finite(l.weights[p]) && finite(l.biases[p]);
  if (!ok) throw Error("importance: model has non-finite parameters");

  Eigen::VectorXd magnitude = model.out_weights.cwiseAbs() * Eigen::VectorXd::Ones(model.out_weights.cols());
  for (std::size_t l = model.hidden.size(); l-- > 0;)
    magnitude = abs_max_over_pieces(model.hidden[l]) * magnitude;
  return std::vector<double>(magnitude.data(), magnitude.data() + magnitude.size());
}

ImportanceTable variable_importance(const MlpModel& model,
                                    std::span<const std::string> column_names) {
  if (column_names.size() != model.arch.input_dim)
    throw Error("importance: " + std::to_string(column_names.size()) +
                " column names for a model with " + std::to_string(model.arch.input_dim) +
                " inputs");
  const std::vector<double> raw = raw_importance(model);
  const double max_raw = raw.empty() ? 0.0 : *std::max_element(raw.begin(), raw.end());
  const double sum_raw = std::accumulate(raw.begin(), raw.end(), 0.0);

  ImportanceTable table;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    ImportanceRow r;
    r.variable = column_names[i];
    r.relative = max_raw > 0.0 ? raw[i] / max_raw : 0.0;
    r.scaled = r.relative;
    r.percentage = sum_raw > 0.0 ? raw[i] / sum_raw : 0.0;
    table.rows.push_back(std::move(r));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const ImportanceRow& a, const ImportanceRow& b) {
                     if (a.relative != b.relative) return a.relative > b.relative;
                     return a.variable < b.variable;
                   });
  return table;
}

void emit_importance(std::ostream& out, const ImportanceTable& table, ImportanceFormat format) {
  if (format == ImportanceFormat::csv) {
    out << "Variable,Relative Importance,Scaled Importance,Percentage\n";
    for (const ImportanceRow& r : table.rows)
      out << r.variable << ',' << fixed6(r.relative) << ',' << fixed6(r.scaled) << ','
          << fixed6(r.percentage) << '\n';
    return;
  }
  std::size_t width = std::string("Variable").size();
  for (const ImportanceRow& r : table.rows) width = std::max(width, r.variable.size());
  auto pad = [width](const std::string& s) { return s + std::string(width - s.size() + 2, ' '); };
  out << "Variable Importances:\n";
  out << pad("Variable") << "Relative Importance  Scaled Importance  Percentage\n";
  for (const ImportanceRow& r : table.rows)
    out << pad(r.variable) << fixed6(r.relative) << ' ' << fixed6(r.scaled) << ' '
        << fixed6(r.percentage) << '\n';
}

ImportanceTable parse_importance(std::istream& in, ImportanceFormat format) {
  ImportanceTable table;
  std::string line;
  const std::size_t header_lines = format == ImportanceFormat::csv ? 1 : 2;
  for (std::size_t i = 0; i < header_lines; ++i)
    if (!std::getline(in, line)) throw Error("importance: missing header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (format == ImportanceFormat::csv) std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    ImportanceRow r;
    if (!(ls >> r.variable >> r.relative >> r.scaled >> r.percentage))
      throw Error("importance: malformed row '" + line + "'");
    table.rows.push_back(std::move(r));
  }
  return table;
}

}  // namespace aptd
