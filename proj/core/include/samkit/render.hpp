#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace samkit {

struct ChartSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
};

struct ChartPanel {
  std::string title;
  std::string y_label;
  std::vector<ChartSeries> series;
};

/// Standalone SVG 1.1 document with the panels laid out side by side.
/// A pure function of its inputs: identical input gives identical bytes.
std::string chart_svg(const std::vector<ChartPanel>& panels, const std::string& x_label);

/// Renders loss_trends.svg, grad_and_distance.svg and train_vs_val.svg from
/// <run_dir>/telemetry.csv. Series whose column is empty are omitted.
void render_run(const std::filesystem::path& run_dir);

}  // namespace samkit
