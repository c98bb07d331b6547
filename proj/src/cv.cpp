#include "aptdetect/cv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <ostream>
#include <thread>

#include "aptdetect/error.hpp"

namespace aptd {

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t f : assignment) sizes[f]++;
  return sizes;
}

FoldPlan stratified_folds(std::span<const Label> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("stratified_folds: k must be >= 2");
  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[class_index(labels[i])].push_back(i);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (members[c].size() < k)
      throw Error("stratified_folds: class '" + std::string(to_string(static_cast<Label>(c))) +
                  "' has " + std::to_string(members[c].size()) + " records, fewer than k = " +
                  std::to_string(k));
  }

  FoldPlan plan;
  plan.k = k;
  plan.master_seed = seed;
  plan.assignment.assign(labels.size(), 0);
  Rng rng(seed);
  std::size_t next_fold = 0;
  for (auto& cls : members) {
    rng.shuffle(std::span<std::size_t>(cls));
    for (std::size_t idx : cls) {
      plan.assignment[idx] = next_fold;
      next_fold = (next_fold + 1) % k;
    }
  }
  return plan;
}

FoldPlan stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed) {
  const std::vector<Label> labels = labels_of(data);
  return stratified_folds(labels, k, seed);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(
    std::span<const std::size_t> indices, std::span<const Label> labels, double train_fraction,
    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("holdout_split: train_fraction must be in (0, 1)");
  if (indices.empty()) throw Error("holdout_split: no records");

  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t idx : indices) members[class_index(labels[idx])].push_back(idx);

  // Interleave classes by relative position within their own shuffled list,
  // so every prefix of the merged order is close to stratified.
  struct Keyed {
    double key;
    std::size_t cls;
    std::size_t idx;
  };
  std::vector<Keyed> merged;
  merged.reserve(indices.size());
  Rng rng(seed);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    rng.shuffle(std::span<std::size_t>(members[c]));
    const auto n_c = static_cast<double>(members[c].size());
    for (std::size_t i = 0; i < members[c].size(); ++i)
      merged.push_back({(static_cast<double>(i) + 0.5) / n_c, c, members[c][i]});
  }
  std::sort(merged.begin(), merged.end(), [](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key < b.key : a.cls < b.cls;
  });

  const auto n_train = static_cast<std::size_t>(
      std::llround(static_cast<double>(indices.size()) * train_fraction));
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  for (std::size_t i = 0; i < merged.size(); ++i)
    (i < n_train ? train : validation).push_back(merged[i].idx);
  std::sort(train.begin(), train.end());
  std::sort(validation.begin(), validation.end());
  return {std::move(train), std::move(validation)};
}

void write_fold_plan(std::ostream& out, const FoldPlan& plan) {
  out << "record,fold\n";
  for (std::size_t i = 0; i < plan.assignment.size(); ++i)
    out << i << ',' << plan.assignment[i] << '\n';
}

CvResult run_cv(const Dataset& data, const ModelSpec& spec, const FoldPlan& plan,
                std::size_t threads) {
  if (plan.assignment.size() != data.size())
    throw Error("run_cv: fold plan covers " + std::to_string(plan.assignment.size()) +
                " records, dataset has " + std::to_string(data.size()));
  const std::vector<Label> truth = labels_of(data);

  std::vector<FoldResult> results(plan.k);
  std::vector<std::exception_ptr> errors(plan.k);
  auto run_fold = [&](std::size_t f) {
    try {
      const std::vector<std::size_t> train = plan.train_indices(f);
      FoldResult r;
      r.test_indices = plan.test_indices(f);
      const TrainedModel model = fit_model(data, train, spec, fold_seed(plan.master_seed, f));
      const std::vector<Prediction> preds = model.predict(data, r.test_indices);
      std::vector<Label> predicted(preds.size());
      std::vector<Label> actual(preds.size());
      r.scores.resize(preds.size());
      for (std::size_t i = 0; i < preds.size(); ++i) {
        predicted[i] = preds[i].label;
        actual[i] = truth[r.test_indices[i]];
        r.scores[i] = preds[i].anomaly_probability;
      }
      r.confusion = confusion(predicted, actual);
      r.predictions = std::move(predicted);
      r.history = model.history;
      results[f] = std::move(r);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, plan.k);
  if (threads <= 1) {
    for (std::size_t f = 0; f < plan.k; ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < threads; ++t)
      workers.emplace_back([&] {
        for (std::size_t f = next++; f < plan.k; f = next++) run_fold(f);
      });
    for (std::thread& w : workers) w.join();
  }

  for (std::size_t f = 0; f < plan.k; ++f) {
    if (!errors[f]) continue;
    try {
      std::rethrow_exception(errors[f]);
    } catch (const std::exception& e) {
      throw FoldError(f, e.what());
    }
  }

  CvResult cv;
  cv.scores.assign(data.size(), 0.0);
  cv.predictions.assign(data.size(), Label::normal);
  std::vector<ConfusionMatrix> cms;
  for (FoldResult& r : results) {
    cms.push_back(r.confusion);
    for (std::size_t i = 0; i < r.test_indices.size(); ++i) {
      cv.scores[r.test_indices[i]] = r.scores[i];
      cv.predictions[r.test_indices[i]] = r.predictions[i];
    }
  }
  cv.pooled = aggregate_cv(cms);
  cv.folds = std::move(results);
  return cv;
}

}  // namespace aptd
