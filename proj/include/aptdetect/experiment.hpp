#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"

#include "aptdetect/config.hpp"
#include "aptdetect/cv.hpp"
#include "aptdetect/dataset.hpp"
#include "aptdetect/evaluation.hpp"
#include "aptdetect/importance.hpp"

namespace aptd {

struct ModelReport {
  ModelKind kind = ModelKind::tree;
  ConfusionMatrix pooled;
  MetricsReport metrics;  // pooled, auc from the out-of-fold scores
  std::vector<ConfusionMatrix> per_fold;
  std::vector<MetricsReport> per_fold_metrics;
  RocCurve roc;
  std::array<LiftChart, kNumClasses> lift;  // indexed by class_index
  std::optional<ImportanceTable> importance;
  TrainHistory history;  // final model
  double cv_seconds = 0.0;
  double final_fit_seconds = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  ClassCounts counts;
  std::vector<ModelReport> models;
  double ingest_seconds = 0.0;
};

// Runs the whole protocol and writes every artifact into config.out_dir:
// fold plan, metrics, per-fold metrics, ROC and lift point files, training
// histories, importance (mlp), final models fitted on all records,
// report.json and the SVG plots. Stage failures throw StageError.
ExperimentReport run_experiment(const ExperimentConfig& config);

// The in-memory part of run_experiment, without any file output. Final
// models are returned through `final_models` when it is non-null.
ExperimentReport evaluate_models(const ExperimentConfig& config, const Dataset& data,
                                 const FoldPlan& plan,
                                 std::vector<TrainedModel>* final_models = nullptr);

// Timings live under a separate "timings" key so the rest of the document is
// a pure function of config and data.
nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);

void write_metrics_csv(std::ostream& out, const ExperimentReport& report);
void write_per_fold_csv(std::ostream& out, const ExperimentReport& report);

// Metric and per-fold CSVs, ROC and lift point files, importance and history
// files plus report.json.
void write_report_files(const ExperimentReport& report, const std::filesystem::path& out_dir);

}  // namespace aptd
