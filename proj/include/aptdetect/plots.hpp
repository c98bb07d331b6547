#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aptdetect/experiment.hpp"

namespace aptd {

// Plot area of every chart, in SVG user units. Data (0,0) sits at the
// bottom-left corner, (1,1) at the top-right.
struct PlotFrame {
  double left = 70.0;
  double top = 40.0;
  double width = 400.0;
  double height = 400.0;

  double x(double u) const { return left + u * width; }
  double y(double v) const { return top + (1.0 - v) * height; }
};

inline constexpr PlotFrame kPlotFrame{};

// ROC points kept for drawing: the endpoints plus every point at least
// `min_step` away (in either coordinate) from the last kept one.
std::vector<RocPoint> decimate_roc(std::span<const RocPoint> points, double min_step = 1e-3);

void write_roc_svg(std::ostream& out, const std::string& model, const RocCurve& curve, double auc);
void write_roc_overlay_svg(std::ostream& out, const ExperimentReport& report);
void write_metrics_svg(std::ostream& out, const ExperimentReport& report);
void write_lift_svg(std::ostream& out, const std::string& model, const LiftChart& chart);

// roc_<model>.svg, roc_all.svg, metrics.svg and lift_<model>_<class>.svg.
void emit_plots(const ExperimentReport& report, const std::filesystem::path& out_dir);

}  // namespace aptd
