#include "aptdetect/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "aptdetect/error.hpp"
#include "aptdetect/model_io.hpp"
#include "aptdetect/plots.hpp"

namespace aptd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw Error("failed writing " + path.string());
}

std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::string pct(const std::optional<double>& v) {
  return v ? format_number(*v * 100.0) : std::string();
}

void write_metric_cells(std::ostream& out, const ConfusionMatrix& cm, const MetricsReport& m) {
  out << cm.tp << ',' << cm.fp << ',' << cm.tn << ',' << cm.fn << ',' << cell(m.acc) << ','
      << cell(m.tpr) << ',' << cell(m.tnr) << ',' << cell(m.ppv) << ',' << cell(m.f_measure) << ','
      << cell(m.fpr) << ',' << cell(m.fnr) << ',' << pct(m.fpr) << ',' << pct(m.fnr) << ','
      << cell(m.auc) << '\n';
}

constexpr const char* kMetricHeader =
    "tp,fp,tn,fn,acc,tpr,tnr,ppv,f_measure,fpr,fnr,fpr_pct,fnr_pct,auc\n";

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

nlohmann::json nan_json(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

double nan_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

nlohmann::json metrics_json(const ConfusionMatrix& cm, const MetricsReport& m) {
  return {{"tp", cm.tp},          {"fp", cm.fp},
          {"tn", cm.tn},          {"fn", cm.fn},
          {"acc", opt_json(m.acc)}, {"tpr", opt_json(m.tpr)},
          {"tnr", opt_json(m.tnr)}, {"ppv", opt_json(m.ppv)},
          {"f_measure", opt_json(m.f_measure)},
          {"fpr", opt_json(m.fpr)}, {"fnr", opt_json(m.fnr)},
          {"fpr_pct", m.fpr ? nlohmann::json(*m.fpr * 100.0) : nlohmann::json(nullptr)},
          {"fnr_pct", m.fnr ? nlohmann::json(*m.fnr * 100.0) : nlohmann::json(nullptr)},
          {"auc", opt_json(m.auc)}};
}

std::pair<ConfusionMatrix, MetricsReport> metrics_from_json(const nlohmann::json& j) {
  ConfusionMatrix cm{j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
                     j.at("tn").get<std::size_t>(), j.at("fn").get<std::size_t>()};
  MetricsReport m;
  m.acc = opt_from(j.at("acc"));
  m.tpr = opt_from(j.at("tpr"));
  m.tnr = opt_from(j.at("tnr"));
  m.ppv = opt_from(j.at("ppv"));
  m.f_measure = opt_from(j.at("f_measure"));
  m.fpr = opt_from(j.at("fpr"));
  m.fnr = opt_from(j.at("fnr"));
  m.auc = opt_from(j.at("auc"));
  return {cm, m};
}

ModelReport evaluate_one(const ExperimentConfig& config, const Dataset& data, const FoldPlan& plan,
                         ModelKind kind, TrainedModel* final_model) {
  const std::string name(to_string(kind));
  const ModelSpec spec = config.spec(kind);
  const std::vector<Label> truth = labels_of(data);
  ModelReport r;
  r.kind = kind;

  const auto t_cv = Clock::now();
  const CvResult cv = stage("cv[" + name + "]", [&] { return run_cv(data, spec, plan, config.threads); });
  r.cv_seconds = seconds_since(t_cv);

  stage("evaluate[" + name + "]", [&] {
    r.pooled = cv.pooled;
    for (const FoldResult& f : cv.folds) {
      r.per_fold.push_back(f.confusion);
      MetricsReport fm = metrics(f.confusion);
      std::vector<Label> fold_truth;
      for (std::size_t i : f.test_indices) fold_truth.push_back(truth[i]);
      const ClassCounts fc{static_cast<std::size_t>(std::count(fold_truth.begin(), fold_truth.end(), Label::normal)),
                           static_cast<std::size_t>(std::count(fold_truth.begin(), fold_truth.end(), Label::anomaly))};
      if (fc.normal > 0 && fc.anomaly > 0) fm.auc = auc(roc_curve(f.scores, fold_truth));
      r.per_fold_metrics.push_back(fm);
    }
    r.metrics = metrics(r.pooled);
    r.roc = roc_curve(cv.scores, truth);
    r.metrics.auc = auc(r.roc);
    for (Label c : {Label::normal, Label::anomaly})
      r.lift[class_index(c)] = lift_chart(cv.scores, truth, c, config.lift_bins);
    return 0;
  });

  const auto t_final = Clock::now();
  TrainedModel model = stage("train[" + name + "]", [&] {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return fit_model(data, all, spec, config.seed);
  });
  r.final_fit_seconds = seconds_since(t_final);
  r.history = model.history;

  if (kind == ModelKind::mlp) {
    r.importance = stage("importance", [&] {
      return variable_importance(std::get<MlpModel>(model.model), model.encoder.column_names());
    });
  }
  if (final_model != nullptr) *final_model = std::move(model);
  return r;
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out = open_out(path);
  body(out);
  close_out(out, path);
}

}  // namespace

ExperimentReport evaluate_models(const ExperimentConfig& config, const Dataset& data,
                                 const FoldPlan& plan, std::vector<TrainedModel>* final_models) {
  ExperimentReport report;
  report.config = config;
  report.counts = class_counts(data);
  if (final_models != nullptr) final_models->clear();
  for (ModelKind kind : config.models()) {
    TrainedModel model;
    report.models.push_back(
        evaluate_one(config, data, plan, kind, final_models != nullptr ? &model : nullptr));
    if (final_models != nullptr) final_models->push_back(std::move(model));
  }
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  stage("config", [&] {
    config.validate();
    return 0;
  });

  const auto t_ingest = Clock::now();
  const Dataset data = stage("ingest", [&] { return load_nslkdd(config.train_path, config.test_path); });
  const double ingest_seconds = seconds_since(t_ingest);

  const FoldPlan plan = stage("folds", [&] { return stratified_folds(data, config.k_folds, config.seed); });

  std::vector<TrainedModel> finals;
  ExperimentReport report = evaluate_models(config, data, plan, &finals);
  report.ingest_seconds = ingest_seconds;

  stage("write", [&] {
    std::filesystem::create_directories(config.out_dir);
    write_file(config.out_dir / "folds.csv", [&](std::ostream& o) { write_fold_plan(o, plan); });
    for (std::size_t i = 0; i < finals.size(); ++i) {
      const std::string name(to_string(finals[i].kind));
      save_model(config.out_dir / ("model_" + name + ".bin"), finals[i]);
    }
    write_report_files(report, config.out_dir);
    emit_plots(report, config.out_dir);
    return 0;
  });
  return report;
}

nlohmann::json report_to_json(const ExperimentReport& report) {
  std::ostringstream config_text;
  write_config(config_text, report.config);

  nlohmann::json models = nlohmann::json::array();
  nlohmann::json timings = {{"ingest_seconds", report.ingest_seconds}};
  nlohmann::json model_timings = nlohmann::json::object();
  for (const ModelReport& m : report.models) {
    const std::string name(to_string(m.kind));
    nlohmann::json folds = nlohmann::json::array();
    for (std::size_t f = 0; f < m.per_fold.size(); ++f)
      folds.push_back(metrics_json(m.per_fold[f], m.per_fold_metrics[f]));
    nlohmann::json roc = nlohmann::json::array();
    for (const RocPoint& p : m.roc.points)
      roc.push_back({p.fpr, p.tpr, std::isinf(p.threshold) ? nlohmann::json("inf") : nlohmann::json(p.threshold)});
    nlohmann::json lift = nlohmann::json::object();
    for (const LiftChart& chart : m.lift) {
      nlohmann::json bins = nlohmann::json::array();
      for (const LiftBin& b : chart.bins)
        bins.push_back({{"size", b.size},
                        {"target_count", b.target_count},
                        {"min_confidence", b.min_confidence},
                        {"max_confidence", b.max_confidence}});
      lift[std::string(to_string(chart.target))] = std::move(bins);
    }
    nlohmann::json history = nlohmann::json::array();
    for (const EpochStats& e : m.history)
      history.push_back({{"train_loss", nan_json(e.train_loss)},
                         {"validation_loss", nan_json(e.validation_loss)},
                         {"validation_accuracy", nan_json(e.validation_accuracy)}});
    nlohmann::json entry = {{"model", name},
                            {"pooled", metrics_json(m.pooled, m.metrics)},
                            {"folds", std::move(folds)},
                            {"roc", std::move(roc)},
                            {"lift", std::move(lift)},
                            {"history", std::move(history)}};
    if (m.importance) {
      nlohmann::json rows = nlohmann::json::array();
      for (const ImportanceRow& row : m.importance->rows)
        rows.push_back({row.variable, row.relative, row.scaled, row.percentage});
      entry["importance"] = std::move(rows);
    }
    models.push_back(std::move(entry));
    model_timings[name] = {{"cv_seconds", m.cv_seconds}, {"final_fit_seconds", m.final_fit_seconds}};
  }
  timings["models"] = std::move(model_timings);

  return {{"seed", report.config.seed},
          {"config", config_text.str()},
          {"records", {{"total", report.counts.total()},
                       {"normal", report.counts.normal},
                       {"anomaly", report.counts.anomaly}}},
          {"models", std::move(models)},
          {"timings", std::move(timings)}};
}

ExperimentReport report_from_json(const nlohmann::json& j) {
  try {
    ExperimentReport report;
    std::istringstream config_text(j.at("config").get<std::string>());
    report.config = parse_config(config_text, ExperimentConfig{});
    report.counts = {j.at("records").at("normal").get<std::size_t>(),
                     j.at("records").at("anomaly").get<std::size_t>()};
    const nlohmann::json timings = j.value("timings", nlohmann::json::object());
    report.ingest_seconds = timings.value("ingest_seconds", 0.0);
    for (const auto& e : j.at("models")) {
      ModelReport m;
      const std::string name = e.at("model").get<std::string>();
      const auto kind = parse_model_kind(name);
      if (!kind) throw Error("unknown model '" + name + "'");
      m.kind = *kind;
      std::tie(m.pooled, m.metrics) = metrics_from_json(e.at("pooled"));
      for (const auto& f : e.at("folds")) {
        auto [cm, fm] = metrics_from_json(f);
        m.per_fold.push_back(cm);
        m.per_fold_metrics.push_back(fm);
      }
      for (const auto& p : e.at("roc")) {
        const double threshold = p.at(2).is_string() ? std::numeric_limits<double>::infinity()
                                                     : p.at(2).get<double>();
        m.roc.points.push_back({p.at(0).get<double>(), p.at(1).get<double>(), threshold});
      }
      for (Label c : {Label::normal, Label::anomaly}) {
        LiftChart& chart = m.lift[class_index(c)];
        chart.target = c;
        for (const auto& b : e.at("lift").at(std::string(to_string(c))))
          chart.bins.push_back({b.at("size").get<std::size_t>(), b.at("target_count").get<std::size_t>(),
                                b.at("min_confidence").get<double>(), b.at("max_confidence").get<double>()});
      }
      for (const auto& h : e.at("history"))
        m.history.push_back({nan_from(h.at("train_loss")), nan_from(h.at("validation_loss")),
                             nan_from(h.at("validation_accuracy"))});
      if (e.contains("importance")) {
        ImportanceTable table;
        for (const auto& row : e.at("importance"))
          table.rows.push_back({row.at(0).get<std::string>(), row.at(1).get<double>(),
                                row.at(2).get<double>(), row.at(3).get<double>()});
        m.importance = std::move(table);
      }
      if (timings.contains("models") && timings["models"].contains(name)) {
        m.cv_seconds = timings["models"][name].value("cv_seconds", 0.0);
        m.final_fit_seconds = timings["models"][name].value("final_fit_seconds", 0.0);
      }
      report.models.push_back(std::move(m));
    }
    return report;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
}

void write_metrics_csv(std::ostream& out, const ExperimentReport& report) {
  out << "model," << kMetricHeader;
  for (const ModelReport& m : report.models) {
    out << to_string(m.kind) << ',';
    write_metric_cells(out, m.pooled, m.metrics);
  }
}

void write_per_fold_csv(std::ostream& out, const ExperimentReport& report) {
  out << "model,fold," << kMetricHeader;
  for (const ModelReport& m : report.models) {
    for (std::size_t f = 0; f < m.per_fold.size(); ++f) {
      out << to_string(m.kind) << ',' << f << ',';
      write_metric_cells(out, m.per_fold[f], m.per_fold_metrics[f]);
    }
  }
}

void write_report_files(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, report); });
  write_file(dir / "metrics_per_fold.csv", [&](std::ostream& o) { write_per_fold_csv(o, report); });
  for (const ModelReport& m : report.models) {
    const std::string name(to_string(m.kind));
    write_file(dir / ("roc_" + name + ".csv"), [&](std::ostream& o) { write_roc_csv(o, m.roc); });
    for (const LiftChart& chart : m.lift)
      write_file(dir / ("lift_" + name + "_" + std::string(to_string(chart.target)) + ".csv"),
                 [&](std::ostream& o) { write_lift_csv(o, chart); });
    if (!m.history.empty())
      write_file(dir / ("history_" + name + ".csv"),
                 [&](std::ostream& o) { write_history_csv(o, m.history); });
    if (m.importance) {
      write_file(dir / ("importance_" + name + ".csv"),
                 [&](std::ostream& o) { emit_importance(o, *m.importance, ImportanceFormat::csv); });
      write_file(dir / ("importance_" + name + ".txt"),
                 [&](std::ostream& o) { emit_importance(o, *m.importance, ImportanceFormat::text); });
    }
  }
  write_file(dir / "report.json", [&](std::ostream& o) { o << report_to_json(report).dump(2) << '\n'; });
}

}  // namespace aptd
