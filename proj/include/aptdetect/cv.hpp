#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "aptdetect/evaluation.hpp"
#include "aptdetect/pipeline.hpp"

namespace aptd {

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  // fold index per record
  std::uint64_t master_seed = 0;

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;
  std::vector<std::size_t> fold_sizes() const;
};

// Each class is shuffled with a generator seeded from `seed`, then the
// classes are dealt one after another round-robin into k folds, the deal
// continuing across class boundaries. Throws when k < 2 or either class has
// fewer than k members.
FoldPlan stratified_folds(std::span<const Label> labels, std::size_t k, std::uint64_t seed);
FoldPlan stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed);

// Stratified shuffle-split of `indices` (positions into `labels`): the first
// round(n * train_fraction) records of a class-interleaved shuffled order go
// to training, the rest to validation.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(
    std::span<const std::size_t> indices, std::span<const Label> labels, double train_fraction,
    std::uint64_t seed);

// Two columns: record index, fold index.
void write_fold_plan(std::ostream& out, const FoldPlan& plan);

struct FoldResult {
  ConfusionMatrix confusion;
  std::vector<std::size_t> test_indices;
  std::vector<double> scores;  // anomaly probability per test record
  std::vector<Label> predictions;
  TrainHistory history;        // mlp only
};

struct CvResult {
  std::vector<FoldResult> folds;
  ConfusionMatrix pooled;
  std::vector<double> scores;        // out-of-fold anomaly probability per record
  std::vector<Label> predictions;    // out-of-fold label per record
};

// Seed of fold f's model: master seed XOR f.
inline std::uint64_t fold_seed(std::uint64_t master, std::size_t fold) { return master ^ fold; }

// Fits on the other k-1 folds and predicts fold f, for every f. Folds run on
// up to `threads` workers (0 = hardware concurrency); results do not depend
// on the thread count. Model errors are rethrown as FoldError.
CvResult run_cv(const Dataset& data, const ModelSpec& spec, const FoldPlan& plan,
                std::size_t threads = 1);

}  // namespace aptd
