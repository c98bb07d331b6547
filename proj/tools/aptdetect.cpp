#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>

#include "aptdetect/config.hpp"
#include "aptdetect/error.hpp"
#include "aptdetect/experiment.hpp"
#include "aptdetect/model_io.hpp"
#include "aptdetect/plots.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> model;
  std::optional<std::size_t> folds;
  std::optional<std::string> out;
  std::optional<std::string> train;
  std::optional<std::string> test;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--model", o.model, "tree, nb, mlp or all");
  cmd->add_option("--folds", o.folds, "Number of cross-validation folds");
  cmd->add_option("--out", o.out, "Output directory (default $APTDETECT_OUT)");
  cmd->add_option("--train", o.train, "NSL-KDD training file");
  cmd->add_option("--test", o.test, "NSL-KDD test file");
  cmd->add_option("--threads", o.threads, "Worker threads for folds (0 = all cores)");
}

aptd::ExperimentConfig resolve(const Overrides& o) {
  aptd::ExperimentConfig c = o.config.empty() ? aptd::default_config() : aptd::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.folds) c.k_folds = *o.folds;
  if (o.out) c.out_dir = *o.out;
  if (o.train) c.train_path = *o.train;
  if (o.test) c.test_path = *o.test;
  if (o.threads) c.threads = *o.threads;
  if (o.model) {
    std::istringstream text("[experiment]\nmodel = " + *o.model + "\n");
    c = aptd::parse_config(text, c);
  }
  return c;
}

std::string pct_cell(const std::optional<double>& v, double scale = 100.0) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * scale);
  return buf;
}

void print_summary(const aptd::ExperimentReport& report) {
  std::printf("records: %zu (normal %zu, anomaly %zu)\n", report.counts.total(), report.counts.normal,
              report.counts.anomaly);
  std::printf("%-6s %8s %8s %8s %8s %8s %8s %8s %8s\n", "model", "ACC", "TPR", "TNR", "PPV", "F", "FPR",
              "FNR", "AUC");
  for (const aptd::ModelReport& m : report.models) {
    const aptd::MetricsReport& r = m.metrics;
    std::printf("%-6s %8s %8s %8s %8s %8s %8s %8s %8s\n", std::string(aptd::to_string(m.kind)).c_str(),
                pct_cell(r.acc).c_str(), pct_cell(r.tpr).c_str(), pct_cell(r.tnr).c_str(),
                pct_cell(r.ppv).c_str(), pct_cell(r.f_measure).c_str(), pct_cell(r.fpr).c_str(),
                pct_cell(r.fnr).c_str(), pct_cell(r.auc).c_str());
  }
}

int cmd_ingest(const aptd::ExperimentConfig& c) {
  if (c.train_path.empty() || c.test_path.empty()) throw aptd::ConfigError("data.train and data.test must both be set");
  const aptd::Dataset data = aptd::load_nslkdd(c.train_path, c.test_path);
  const aptd::ClassCounts counts = aptd::class_counts(data);
  std::filesystem::create_directories(c.out_dir);
  const auto path = c.out_dir / "merged.csv";
  std::ofstream out(path, std::ios::binary);
  aptd::write_canonical(out, data);
  if (!out.flush()) throw aptd::Error("failed writing " + path.string());
  std::printf("records: %zu\nnormal: %zu\nanomaly: %zu\nwrote %s\n", counts.total(), counts.normal,
              counts.anomaly, path.string().c_str());
  return 0;
}

int cmd_train(const aptd::ExperimentConfig& c) {
  c.validate();
  const aptd::Dataset data = aptd::load_nslkdd(c.train_path, c.test_path);
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::filesystem::create_directories(c.out_dir);
  for (aptd::ModelKind kind : c.models()) {
    const aptd::TrainedModel model = aptd::fit_model(data, all, c.spec(kind), c.seed);
    const auto path = c.out_dir / ("model_" + std::string(aptd::to_string(kind)) + ".bin");
    aptd::save_model(path, model);
    std::printf("wrote %s\n", path.string().c_str());
  }
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input, const std::string& output) {
  const aptd::TrainedModel model = aptd::load_model(std::filesystem::path(model_path));
  const aptd::Dataset data = aptd::relabel_binary(
      aptd::parse_nslkdd_file(input, model.encoder.schema()), model.encoder.schema());
  const std::vector<aptd::Prediction> preds = model.predict(data);
  std::ofstream file;
  if (!output.empty()) {
    file.open(output, std::ios::binary);
    if (!file) throw aptd::Error("cannot open " + output + " for writing");
  }
  std::ostream& out = output.empty() ? std::cout : file;
  out << "record,label,predicted,anomaly_probability,confidence\n";
  for (std::size_t i = 0; i < preds.size(); ++i)
    out << i << ',' << aptd::to_string(data.records[i].label) << ',' << aptd::to_string(preds[i].label) << ','
        << aptd::format_number(preds[i].anomaly_probability) << ','
        << aptd::format_number(preds[i].confidence) << '\n';
  if (!out.flush()) throw aptd::Error("failed writing predictions");
  return 0;
}

int cmd_report(const aptd::ExperimentConfig& c) {
  const auto path = c.out_dir / "report.json";
  std::ifstream in(path);
  if (!in) throw aptd::Error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw aptd::Error(path.string() + ": " + e.what());
  }
  const aptd::ExperimentReport report = aptd::report_from_json(j);
  aptd::write_report_files(report, c.out_dir);
  aptd::emit_plots(report, c.out_dir);
  print_summary(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary intrusion detection experiments on NSL-KDD style data"};
  app.require_subcommand(1);

  Overrides o;
  auto* ingest = app.add_subcommand("ingest", "Parse, relabel and merge the data files");
  auto* cv = app.add_subcommand("cv", "Cross-validate the selected models and write every report");
  auto* train = app.add_subcommand("train", "Fit the selected models on all records and save them");
  auto* predict = app.add_subcommand("predict", "Score an NSL-KDD file with a saved model");
  auto* report = app.add_subcommand("report", "Re-render CSV files and plots from report.json");
  auto* print_config = app.add_subcommand("print-config", "Print the effective configuration");
  for (CLI::App* cmd : {ingest, cv, train, predict, report, print_config}) add_common(cmd, o);

  std::string model_file;
  std::string input;
  std::string output;
  predict->add_option("--model-file", model_file, "Saved model")->required()->check(CLI::ExistingFile);
  predict->add_option("--input", input, "NSL-KDD file to score")->required()->check(CLI::ExistingFile);
  predict->add_option("--output", output, "CSV destination (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    const aptd::ExperimentConfig c = resolve(o);
    if (*ingest) return cmd_ingest(c);
    if (*cv) {
      print_summary(aptd::run_experiment(c));
      std::printf("artifacts in %s\n", c.out_dir.string().c_str());
      return 0;
    }
    if (*train) return cmd_train(c);
    if (*predict) return cmd_predict(model_file, input, output);
    if (*report) return cmd_report(c);
    if (*print_config) {
      aptd::write_config(std::cout, c);
      return 0;
    }
  } catch (const aptd::StageError& e) {
    std::fprintf(stderr, "error in stage %s\n%s\n", e.stage().c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
