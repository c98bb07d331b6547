#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aptd {

enum class FeatureKind : std::uint8_t { numeric, categorical_binary, nominal };

std::string_view to_string(FeatureKind kind);

struct Feature {
  std::string name;
  FeatureKind kind;

  bool operator==(const Feature&) const = default;
};

// Binary class label. Anomaly is the positive class everywhere.
enum class Label : std::uint8_t { normal = 0, anomaly = 1 };

inline constexpr std::size_t kNumClasses = 2;

inline constexpr std::size_t class_index(Label l) { return static_cast<std::size_t>(l); }
std::string_view to_string(Label label);

// Ordered feature list of a record file. Non-nominal values (numeric and
// categorical_binary) live in a record's numeric slots, nominal values in its
// text slots; both keep schema order.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<Feature> features);

  // The 41 NSL-KDD connection features.
  static const FeatureSchema& nsl_kdd();

  std::size_t size() const { return features_.size(); }
  const Feature& operator[](std::size_t i) const { return features_[i]; }
  const std::vector<Feature>& features() const { return features_; }

  // Field position of the label in a record line (right after the features).
  std::size_t label_position() const { return features_.size(); }

  std::size_t numeric_count() const { return numeric_features_.size(); }
  std::size_t nominal_count() const { return nominal_features_.size(); }

  // Schema index of the i-th numeric / nominal slot.
  std::size_t numeric_feature(std::size_t slot) const { return numeric_features_[slot]; }
  std::size_t nominal_feature(std::size_t slot) const { return nominal_features_[slot]; }

  // Slot index of a feature within its storage group.
  std::size_t slot(std::size_t feature) const { return slots_[feature]; }

  std::optional<std::size_t> index_of(std::string_view name) const;

  bool operator==(const FeatureSchema& other) const { return features_ == other.features_; }

 private:
  std::vector<Feature> features_;
  std::vector<std::size_t> numeric_features_;
  std::vector<std::size_t> nominal_features_;
  std::vector<std::size_t> slots_;
};

}  // namespace aptd
