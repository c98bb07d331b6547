#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "aptdetect/prediction.hpp"
#include "aptdetect/preprocess.hpp"

namespace aptd {

// Per-class record counts, indexed by class_index(Label).
using ClassDist = std::array<std::size_t, kNumClasses>;

// -sum p log2 p over the non-zero counts. Throws when the total is zero.
double entropy(std::span<const std::size_t> counts);
inline double entropy(const ClassDist& d) { return entropy(std::span<const std::size_t>(d)); }

// Entropy of the partition-size distribution.
double split_info(std::span<const std::size_t> partition_sizes);

// entropy(parent) - sum_i |C_i|/|C| * entropy(C_i). Empty partitions are ignored.
double info_gain(const ClassDist& parent, std::span<const ClassDist> partitions);

// info_gain / split_info, or nullopt when split_info is zero (the candidate
// is rejected).
std::optional<double> gain_ratio(const ClassDist& parent, std::span<const ClassDist> partitions);

enum class SplitKind : std::uint8_t { threshold, multiway };

struct SplitCandidate {
  std::size_t feature = 0;
  SplitKind kind = SplitKind::threshold;
  double threshold = 0.0;              // threshold: left branch is value <= threshold
  std::vector<int> branch_codes;       // multiway: category code of each branch
  std::vector<std::vector<std::size_t>> partitions;  // record indices per branch
  double gain = 0.0;
  double split_info = 0.0;
  double gain_ratio = 0.0;
};

struct TreeParams {
  std::size_t max_depth = 20;
  std::size_t min_leaf = 2;
  double min_gain_ratio = 0.0;
};

// Best admissible split of `records` on one feature. Numeric and binary
// features are tried at the midpoints of consecutive distinct values; a
// nominal feature yields one multiway split over the values present.
// Admissible candidates have positive gain no smaller than the mean gain of
// the feature's positive-gain candidates; a threshold split also needs
// min_leaf records on each side and a multiway split needs two branches with
// min_leaf records. Ties go to the lowest threshold.
std::optional<SplitCandidate> best_split(const MixedTable& table,
                                         std::span<const std::size_t> records,
                                         std::size_t feature, std::size_t min_leaf = 1);

struct TreeNode {
  bool leaf = true;
  Label label = Label::normal;
  ClassDist dist{};
  // Internal nodes only.
  std::size_t feature = 0;
  SplitKind kind = SplitKind::threshold;
  double threshold = 0.0;
  std::vector<int> branch_codes;
  std::vector<std::size_t> children;  // indices into TreeModel::nodes
  std::size_t default_child = 0;      // position within `children`
};

class TreeModel {
 public:
  std::vector<Feature> columns;
  std::vector<std::vector<std::string>> categories;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t depth() const;
  std::size_t leaf_count() const;
  // Index of the leaf a row is routed to.
  std::size_t route(std::span<const double> row) const;
};

TreeModel train_tree(const MixedTable& table, const TreeParams& params = {});

// Majority class of the reached leaf, with Laplace-smoothed confidence
// (c + 1) / (n + 2).
Prediction predict_tree(const TreeModel& model, std::span<const double> row);

// Nested structured form: each node carries its class distribution, and
// internal nodes their feature name, test and branches.
nlohmann::json tree_to_json(const TreeModel& model);
TreeModel tree_from_json(const nlohmann::json& j);

}  // namespace aptd
