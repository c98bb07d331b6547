#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aptdetect/schema.hpp"

namespace aptd {

// One parsed line of an NSL-KDD file, before relabeling.
struct RawRecord {
  std::vector<double> numeric;     // numeric + categorical_binary features, schema order
  std::vector<std::string> text;   // nominal features, schema order
  std::string raw_label;
  std::optional<int> difficulty;

  bool operator==(const RawRecord&) const = default;
};

struct Record {
  std::vector<double> numeric;
  std::vector<std::string> text;
  Label label = Label::normal;

  bool operator==(const Record&) const = default;
};

enum class Provenance { train, test, merged };

std::string_view to_string(Provenance p);

struct Dataset {
  FeatureSchema schema;
  std::vector<Record> records;
  Provenance provenance = Provenance::train;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

struct ClassCounts {
  std::size_t normal = 0;
  std::size_t anomaly = 0;

  std::size_t total() const { return normal + anomaly; }
  bool operator==(const ClassCounts&) const = default;
};

// Parses comma-separated NSL-KDD text. Lines carry 41 features and a label,
// optionally followed by a difficulty integer. Blank lines are skipped; LF
// and CRLF endings are accepted. Throws ParseError on malformed lines and
// Error on an empty source.
std::vector<RawRecord> parse_nslkdd(std::istream& in, const FeatureSchema& schema);
std::vector<RawRecord> parse_nslkdd_file(const std::filesystem::path& path,
                                         const FeatureSchema& schema);

// Writes records back in NSL-KDD line format (difficulty column only when
// present).
void write_nslkdd(std::ostream& out, const std::vector<RawRecord>& records,
                  const FeatureSchema& schema);

// Trimmed, lowercased label with any trailing '.' removed.
std::string normalize_label(std::string_view raw);

// Every label other than "normal" becomes anomaly.
Dataset relabel_binary(const std::vector<RawRecord>& records, const FeatureSchema& schema,
                       Provenance provenance = Provenance::train);

// Train records followed by test records. Throws Error on schema mismatch.
Dataset merge(const Dataset& train, const Dataset& test);

ClassCounts class_counts(const Dataset& dataset);

// Canonical dump: header row of feature names plus "label", one record per
// line.
void write_canonical(std::ostream& out, const Dataset& dataset);

// Parse + relabel + merge of a train/test file pair.
Dataset load_nslkdd(const std::filesystem::path& train, const std::filesystem::path& test,
                    const FeatureSchema& schema = FeatureSchema::nsl_kdd());

// Shortest round-trip decimal form of a value.
std::string format_number(double v);

}  // namespace aptd
