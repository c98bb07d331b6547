#include "aptdetect/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "aptdetect/error.hpp"

namespace aptd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

void split_fields(std::string_view line, std::vector<std::string_view>& fields) {
  fields.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      return;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

bool is_missing(std::string_view field) { return field.empty() || field == "?"; }

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::train: return "train";
    case Provenance::test: return "test";
    case Provenance::merged: return "merged";
  }
  return "?";
}

std::string format_number(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::vector<RawRecord> parse_nslkdd(std::istream& in, const FeatureSchema& schema) {
  const std::size_t n_features = schema.size();
  std::vector<RawRecord> records;
  std::vector<std::string_view> fields;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;

    split_fields(view, fields);
    if (fields.size() != n_features + 1 && fields.size() != n_features + 2) {
      throw ParseError(line_no, ParseError::npos,
                       "expected " + std::to_string(n_features + 1) + " or " +
                           std::to_string(n_features + 2) + " fields, found " +
                           std::to_string(fields.size()));
    }

    RawRecord rec;
    rec.numeric.reserve(schema.numeric_count());
    rec.text.reserve(schema.nominal_count());
    for (std::size_t f = 0; f < n_features; ++f) {
      const std::string_view field = fields[f];
      if (is_missing(field)) throw ParseError(line_no, f, "missing value");
      if (schema[f].kind == FeatureKind::nominal) {
        rec.text.emplace_back(field);
        continue;
      }
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v) || v < 0.0) {
        throw ParseError(line_no, f,
                         "'" + std::string(field) + "' is not a non-negative number (" +
                             schema[f].name + ")");
      }
      rec.numeric.push_back(v);
    }

    const std::string_view label = fields[n_features];
    if (label.empty()) throw ParseError(line_no, n_features, "empty label");
    rec.raw_label = std::string(label);

    if (fields.size() == n_features + 2) {
      const std::string_view d = fields[n_features + 1];
      int difficulty = 0;
      auto [ptr, ec] = std::from_chars(d.data(), d.data() + d.size(), difficulty);
      if (ec != std::errc() || ptr != d.data() + d.size())
        throw ParseError(line_no, n_features + 1, "'" + std::string(d) + "' is not an integer");
      rec.difficulty = difficulty;
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw Error("empty NSL-KDD source");
  return records;
}

std::vector<RawRecord> parse_nslkdd_file(const std::filesystem::path& path,
                                         const FeatureSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return parse_nslkdd(in, schema);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.field(), e.detail(), path.string());
  }
}

void write_nslkdd(std::ostream& out, const std::vector<RawRecord>& records,
                  const FeatureSchema& schema) {
  for (const RawRecord& rec : records) {
    for (std::size_t f = 0; f < schema.size(); ++f) {
      if (schema[f].kind == FeatureKind::nominal)
        out << rec.text[schema.slot(f)];
      else
        out << format_number(rec.numeric[schema.slot(f)]);
      out << ',';
    }
    out << rec.raw_label;
    if (rec.difficulty) out << ',' << *rec.difficulty;
    out << '\n';
  }
}

std::string normalize_label(std::string_view raw) {
  std::string s(trim(raw));
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  while (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

Dataset relabel_binary(const std::vector<RawRecord>& records, const FeatureSchema& schema,
                       Provenance provenance) {
  Dataset ds{schema, {}, provenance};
  ds.records.reserve(records.size());
  for (const RawRecord& raw : records) {
    const Label label = normalize_label(raw.raw_label) == "normal" ? Label::normal : Label::anomaly;
    ds.records.push_back(Record{raw.numeric, raw.text, label});
  }
  return ds;
}

Dataset merge(const Dataset& train, const Dataset& test) {
  if (!(train.schema == test.schema)) throw Error("cannot merge datasets with different schemas");
  Dataset out{train.schema, {}, Provenance::merged};
  out.records.reserve(train.size() + test.size());
  out.records.insert(out.records.end(), train.records.begin(), train.records.end());
  out.records.insert(out.records.end(), test.records.begin(), test.records.end());
  return out;
}

ClassCounts class_counts(const Dataset& dataset) {
  ClassCounts c;
  for (const Record& r : dataset.records) (r.label == Label::normal ? c.normal : c.anomaly)++;
  return c;
}

void write_canonical(std::ostream& out, const Dataset& dataset) {
  const FeatureSchema& schema = dataset.schema;
  for (const Feature& f : schema.features()) out << f.name << ',';
  out << "label\n";
  for (const Record& rec : dataset.records) {
    for (std::size_t f = 0; f < schema.size(); ++f) {
      if (schema[f].kind == FeatureKind::nominal)
        out << rec.text[schema.slot(f)];
      else
        out << format_number(rec.numeric[schema.slot(f)]);
      out << ',';
    }
    out << to_string(rec.label) << '\n';
  }
}

Dataset load_nslkdd(const std::filesystem::path& train, const std::filesystem::path& test,
                    const FeatureSchema& schema) {
  return merge(relabel_binary(parse_nslkdd_file(train, schema), schema, Provenance::train),
               relabel_binary(parse_nslkdd_file(test, schema), schema, Provenance::test));
}

}  // namespace aptd
