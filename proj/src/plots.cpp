#include "aptdetect/plots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>

#include "aptdetect/error.hpp"

namespace aptd {

namespace {

constexpr double kCanvasW = 560.0;
constexpr double kCanvasH = 500.0;
constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c",
                                              "#ff7f0e", "#9467bd", "#8c564b"};

std::string fmt(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void open_svg(std::ostream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kCanvasW, 0) << "\" height=\""
      << fmt(kCanvasH, 0) << "\" viewBox=\"0 0 " << fmt(kCanvasW, 0) << ' ' << fmt(kCanvasH, 0)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text class=\"title\" x=\"" << fmt(kCanvasW / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title) << "</text>\n";
}

// Frame, unit-interval ticks on both axes and axis titles.
void axes(std::ostream& out, const std::string& xlabel, const std::string& ylabel, bool x_ticks = true) {
  const PlotFrame& f = kPlotFrame;
  out << "<rect class=\"frame\" x=\"" << fmt(f.left) << "\" y=\"" << fmt(f.top) << "\" width=\""
      << fmt(f.width) << "\" height=\"" << fmt(f.height) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    if (x_ticks)
      out << "<text x=\"" << fmt(f.x(v)) << "\" y=\"" << fmt(f.top + f.height + 16)
          << "\" text-anchor=\"middle\">" << fmt(v, 1) << "</text>\n";
    out << "<text x=\"" << fmt(f.left - 6) << "\" y=\"" << fmt(f.y(v) + 4) << "\" text-anchor=\"end\">"
        << fmt(v, 1) << "</text>\n";
    out << "<line x1=\"" << fmt(f.left) << "\" y1=\"" << fmt(f.y(v)) << "\" x2=\"" << fmt(f.left + f.width)
        << "\" y2=\"" << fmt(f.y(v)) << "\" stroke=\"#e0e0e0\"/>\n";
  }
  out << "<text x=\"" << fmt(f.left + f.width / 2) << "\" y=\"" << fmt(f.top + f.height + 36)
      << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n"
      << "<text x=\"18\" y=\"" << fmt(f.top + f.height / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << fmt(f.top + f.height / 2) << ")\">" << escape(ylabel) << "</text>\n";
}

std::string roc_points_attr(std::span<const RocPoint> points) {
  std::string s;
  for (const RocPoint& p : decimate_roc(points)) {
    if (!s.empty()) s += ' ';
    s += fmt(kPlotFrame.x(p.fpr)) + ',' + fmt(kPlotFrame.y(p.tpr));
  }
  return s;
}

void diagonal(std::ostream& out) {
  const PlotFrame& f = kPlotFrame;
  out << "<line class=\"chance\" x1=\"" << fmt(f.x(0)) << "\" y1=\"" << fmt(f.y(0)) << "\" x2=\""
      << fmt(f.x(1)) << "\" y2=\"" << fmt(f.y(1)) << "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  body(out);
  out.close();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

std::vector<RocPoint> decimate_roc(std::span<const RocPoint> points, double min_step) {
  std::vector<RocPoint> kept;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const bool endpoint = i == 0 || i + 1 == points.size();
    if (endpoint || std::abs(points[i].fpr - kept.back().fpr) >= min_step ||
        std::abs(points[i].tpr - kept.back().tpr) >= min_step)
      kept.push_back(points[i]);
  }
  return kept;
}

void write_roc_svg(std::ostream& out, const std::string& model, const RocCurve& curve, double auc_value) {
  open_svg(out, "ROC curve: " + model);
  axes(out, "False positive rate", "True positive rate");
  diagonal(out);
  std::string d;
  for (const RocPoint& p : decimate_roc(curve.points))
    d += (d.empty() ? "M " : " L ") + fmt(kPlotFrame.x(p.fpr)) + ' ' + fmt(kPlotFrame.y(p.tpr));
  out << "<path class=\"roc\" d=\"" << d << "\" fill=\"none\" stroke=\"" << kPalette[0]
      << "\" stroke-width=\"2\"/>\n"
      << "<text class=\"auc\" x=\"" << fmt(kPlotFrame.x(0.95)) << "\" y=\"" << fmt(kPlotFrame.y(0.05))
      << "\" text-anchor=\"end\" font-size=\"14\">AUC = " << fmt(auc_value, 4) << "</text>\n"
      << "</svg>\n";
}

void write_roc_overlay_svg(std::ostream& out, const ExperimentReport& report) {
  open_svg(out, "ROC comparison");
  axes(out, "False positive rate", "True positive rate");
  diagonal(out);
  for (std::size_t i = 0; i < report.models.size(); ++i) {
    const ModelReport& m = report.models[i];
    const std::string name(to_string(m.kind));
    const char* colour = kPalette[i % kPalette.size()];
    out << "<polyline class=\"roc\" data-model=\"" << name << "\" points=\"" << roc_points_attr(m.roc.points)
        << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    const double ly = kPlotFrame.y(0.05) - 18.0 * static_cast<double>(report.models.size() - 1 - i);
    out << "<line x1=\"" << fmt(kPlotFrame.x(0.55)) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
        << fmt(kPlotFrame.x(0.62)) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << colour
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << fmt(kPlotFrame.x(0.64)) << "\" y=\"" << fmt(ly) << "\">" << name
        << " (AUC " << (m.metrics.auc ? fmt(*m.metrics.auc, 4) : std::string("n/a")) << ")</text>\n";
  }
  out << "</svg>\n";
}

void write_metrics_svg(std::ostream& out, const ExperimentReport& report) {
  struct Column {
    const char* label;
    std::optional<double> MetricsReport::*field;
  };
  static constexpr std::array<Column, 7> kColumns{{{"ACC", &MetricsReport::acc},
                                                   {"TPR", &MetricsReport::tpr},
                                                   {"TNR", &MetricsReport::tnr},
                                                   {"PPV", &MetricsReport::ppv},
                                                   {"F", &MetricsReport::f_measure},
                                                   {"FPR", &MetricsReport::fpr},
                                                   {"FNR", &MetricsReport::fnr}}};
  open_svg(out, "Classification metrics");
  axes(out, "", "Value", false);
  const PlotFrame& f = kPlotFrame;
  const double group_w = f.width / kColumns.size();
  const std::size_t n = std::max<std::size_t>(report.models.size(), 1);
  const double bar_w = group_w * 0.8 / static_cast<double>(n);
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    const double gx = f.left + group_w * static_cast<double>(c) + group_w * 0.1;
    for (std::size_t i = 0; i < report.models.size(); ++i) {
      const std::optional<double>& v = report.models[i].metrics.*kColumns[c].field;
      if (!v) continue;
      out << "<rect class=\"bar\" data-model=\"" << to_string(report.models[i].kind) << "\" data-metric=\""
          << kColumns[c].label << "\" x=\"" << fmt(gx + bar_w * static_cast<double>(i)) << "\" y=\""
          << fmt(f.y(*v)) << "\" width=\"" << fmt(bar_w) << "\" height=\"" << fmt(f.y(0) - f.y(*v))
          << "\" fill=\"" << kPalette[i % kPalette.size()] << "\"><title>" << fmt(*v, 4) << "</title></rect>\n";
    }
    out << "<text x=\"" << fmt(gx + group_w * 0.4) << "\" y=\"" << fmt(f.top + f.height + 16)
        << "\" text-anchor=\"middle\">" << kColumns[c].label << "</text>\n";
  }
  for (std::size_t i = 0; i < report.models.size(); ++i) {
    const double lx = f.left + 10.0 + 90.0 * static_cast<double>(i);
    out << "<rect x=\"" << fmt(lx) << "\" y=\"" << fmt(f.top + f.height + 28) << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[i % kPalette.size()] << "\"/>\n"
        << "<text x=\"" << fmt(lx + 14) << "\" y=\"" << fmt(f.top + f.height + 37) << "\">"
        << to_string(report.models[i].kind) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_lift_svg(std::ostream& out, const std::string& model, const LiftChart& chart) {
  const std::string target(to_string(chart.target));
  open_svg(out, "Lift chart: " + model + ", class " + target);
  axes(out, "Bin (descending confidence)", "Share of bin in class " + target, false);
  const PlotFrame& f = kPlotFrame;
  const double bin_w = chart.bins.empty() ? 0.0 : f.width / static_cast<double>(chart.bins.size());
  std::size_t total = 0;
  std::size_t hits = 0;
  for (const LiftBin& b : chart.bins) {
    total += b.size;
    hits += b.target_count;
  }
  for (std::size_t i = 0; i < chart.bins.size(); ++i) {
    const LiftBin& b = chart.bins[i];
    const double share = b.size ? static_cast<double>(b.target_count) / static_cast<double>(b.size) : 0.0;
    const double x = f.left + bin_w * static_cast<double>(i);
    out << "<rect class=\"bin\" x=\"" << fmt(x + bin_w * 0.1) << "\" y=\"" << fmt(f.y(share)) << "\" width=\""
        << fmt(bin_w * 0.8) << "\" height=\"" << fmt(f.y(0) - f.y(share)) << "\" fill=\"" << kPalette[0]
        << "\"><title>" << b.target_count << " of " << b.size << ", confidence " << fmt(b.min_confidence, 4)
        << " to " << fmt(b.max_confidence, 4) << "</title></rect>\n"
        << "<text x=\"" << fmt(x + bin_w / 2) << "\" y=\"" << fmt(f.top + f.height + 16)
        << "\" text-anchor=\"middle\">" << i + 1 << "</text>\n";
  }
  if (total > 0) {
    const double base = static_cast<double>(hits) / static_cast<double>(total);
    out << "<line class=\"baseline\" x1=\"" << fmt(f.x(0)) << "\" y1=\"" << fmt(f.y(base)) << "\" x2=\""
        << fmt(f.x(1)) << "\" y2=\"" << fmt(f.y(base)) << "\" stroke=\"" << kPalette[1]
        << "\" stroke-dasharray=\"6 3\"/>\n";
  }
  out << "</svg>\n";
}

void emit_plots(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const ModelReport& m : report.models) {
    const std::string name(to_string(m.kind));
    write_file(dir / ("roc_" + name + ".svg"),
               [&](std::ostream& o) { write_roc_svg(o, name, m.roc, m.metrics.auc.value_or(auc(m.roc))); });
    for (const LiftChart& chart : m.lift)
      write_file(dir / ("lift_" + name + "_" + std::string(to_string(chart.target)) + ".svg"),
                 [&](std::ostream& o) { write_lift_svg(o, name, chart); });
  }
  write_file(dir / "roc_all.svg", [&](std::ostream& o) { write_roc_overlay_svg(o, report); });
  write_file(dir / "metrics.svg", [&](std::ostream& o) { write_metrics_svg(o, report); });
}

}  // namespace aptd
