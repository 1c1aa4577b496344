#include "samkit/render.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>

#include "samkit/errors.hpp"
#include "samkit/telemetry.hpp"

namespace samkit {

namespace {

constexpr double kPanelWidth = 460.0;
constexpr double kPanelHeight = 340.0;
constexpr double kMarginLeft = 62.0;
constexpr double kMarginRight = 16.0;
constexpr double kMarginTop = 34.0;
constexpr double kMarginBottom = 44.0;

const char* kPalette[4] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"};

std::string fixed(double v, int precision) {
  char buf[48];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed,
                                       precision);
  if (ec != std::errc()) return "0";
  return std::string(buf, ptr);
}

std::string tick_label(double v) {
  char buf[48];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 6);
  if (ec != std::errc()) return "0";
  return std::string(buf, ptr);
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range data_range(const std::vector<ChartSeries>& series, bool use_x) {
  bool seen = false;
  Range r{0.0, 1.0};
  for (const ChartSeries& s : series) {
    const auto& v = use_x ? s.xs : s.ys;
    for (double x : v) {
      if (!std::isfinite(x)) continue;
      if (!seen) {
        r.lo = r.hi = x;
        seen = true;
      } else {
        r.lo = std::min(r.lo, x);
        r.hi = std::max(r.hi, x);
      }
    }
  }
  if (!seen) return {0.0, 1.0};
  if (r.lo == r.hi) {
    const double pad = std::max(0.5, std::abs(r.lo) * 0.1);
    r.lo -= pad;
    r.hi += pad;
  } else {
    const double pad = (r.hi - r.lo) * 0.05;
    r.lo -= pad;
    r.hi += pad;
  }
  return r;
}

void append_panel(std::string& svg, const ChartPanel& panel, const std::string& x_label,
                  double x_offset) {
  const double plot_x = x_offset + kMarginLeft;
  const double plot_y = kMarginTop;
  const double plot_w = kPanelWidth - kMarginLeft - kMarginRight;
  const double plot_h = kPanelHeight - kMarginTop - kMarginBottom;

  const Range xr = data_range(panel.series, true);
  const Range yr = data_range(panel.series, false);
  const auto px = [&](double x) { return plot_x + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  const auto py = [&](double y) {
    return plot_y + plot_h - (y - yr.lo) / (yr.hi - yr.lo) * plot_h;
  };

  svg += "<g>\n";
  svg += "<text x=\"" + fixed(x_offset + kPanelWidth / 2, 2) + "\" y=\"20\" text-anchor=\""
         "middle\" font-size=\"14\" font-family=\"sans-serif\">" + panel.title + "</text>\n";

  // frame and ticks
  svg += "<rect x=\"" + fixed(plot_x, 2) + "\" y=\"" + fixed(plot_y, 2) + "\" width=\"" +
         fixed(plot_w, 2) + "\" height=\"" + fixed(plot_h, 2) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / kTicks;
    const double gx = px(fx);
    svg += "<line x1=\"" + fixed(gx, 2) + "\" y1=\"" + fixed(plot_y, 2) + "\" x2=\"" +
           fixed(gx, 2) + "\" y2=\"" + fixed(plot_y + plot_h, 2) +
           "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    svg += "<text x=\"" + fixed(gx, 2) + "\" y=\"" + fixed(plot_y + plot_h + 16, 2) +
           "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">" +
           tick_label(fx) + "</text>\n";

    const double fy = yr.lo + (yr.hi - yr.lo) * i / kTicks;
    const double gy = py(fy);
    svg += "<line x1=\"" + fixed(plot_x, 2) + "\" y1=\"" + fixed(gy, 2) + "\" x2=\"" +
           fixed(plot_x + plot_w, 2) + "\" y2=\"" + fixed(gy, 2) +
           "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    svg += "<text x=\"" + fixed(plot_x - 6, 2) + "\" y=\"" + fixed(gy + 3, 2) +
           "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" +
           tick_label(fy) + "</text>\n";
  }

  svg += "<text x=\"" + fixed(plot_x + plot_w / 2, 2) + "\" y=\"" +
         fixed(kPanelHeight - 10, 2) +
         "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" + x_label +
         "</text>\n";
  svg += "<text x=\"" + fixed(x_offset + 14, 2) + "\" y=\"" +
         fixed(plot_y + plot_h / 2, 2) + "\" text-anchor=\"middle\" font-size=\"12\" "
         "font-family=\"sans-serif\" transform=\"rotate(-90 " + fixed(x_offset + 14, 2) + " " +
         fixed(plot_y + plot_h / 2, 2) + ")\">" + panel.y_label + "</text>\n";

  // series
  for (std::size_t s = 0; s < panel.series.size(); ++s) {
    const ChartSeries& series = panel.series[s];
    const char* color = kPalette[s % 4];
    std::string points;
    std::size_t kept = 0;
    double last_x = 0.0, last_y = 0.0;
    for (std::size_t i = 0; i < series.xs.size() && i < series.ys.size(); ++i) {
      if (!std::isfinite(series.xs[i]) || !std::isfinite(series.ys[i])) continue;
      last_x = px(series.xs[i]);
      last_y = py(series.ys[i]);
      points += fixed(last_x, 2) + "," + fixed(last_y, 2) + " ";
      ++kept;
    }
    if (kept == 0) continue;
    if (kept == 1) {
      svg += "<circle cx=\"" + fixed(last_x, 2) + "\" cy=\"" + fixed(last_y, 2) +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";
    } else {
      points.pop_back();
      svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    }
    // legend entry
    const double ly = plot_y + 14 + 16 * static_cast<double>(s);
    svg += "<line x1=\"" + fixed(plot_x + plot_w - 120, 2) + "\" y1=\"" + fixed(ly - 4, 2) +
           "\" x2=\"" + fixed(plot_x + plot_w - 100, 2) + "\" y2=\"" + fixed(ly - 4, 2) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fixed(plot_x + plot_w - 94, 2) + "\" y=\"" + fixed(ly, 2) +
           "\" font-size=\"11\" font-family=\"sans-serif\">" + series.label + "</text>\n";
  }
  svg += "</g>\n";
}

}  // namespace

std::string chart_svg(const std::vector<ChartPanel>& panels, const std::string& x_label) {
  const double width = kPanelWidth * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         fixed(width, 0) + "\" height=\"" + fixed(kPanelHeight, 0) + "\" viewBox=\"0 0 " +
         fixed(width, 0) + " " + fixed(kPanelHeight, 0) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    append_panel(svg, panels[i], x_label, kPanelWidth * static_cast<double>(i));
  }
  svg += "</svg>\n";
  return svg;
}

namespace {

void write_svg(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("render: cannot open " + path.string());
  out << content;
  out.close();
  if (!out) throw IoError("render: write failed for " + path.string());
}

ChartSeries epoch_series(const std::vector<TelemetryRecord>& records, const std::string& label,
                         double TelemetryRecord::* field) {
  ChartSeries s;
  s.label = label;
  for (const TelemetryRecord& rec : records) {
    s.xs.push_back(static_cast<double>(rec.epoch));
    s.ys.push_back(rec.*field);
  }
  return s;
}

std::optional<ChartSeries> optional_series(const std::vector<TelemetryRecord>& records,
                                           const std::string& label,
                                           std::optional<double> TelemetryRecord::* field) {
  ChartSeries s;
  s.label = label;
  for (const TelemetryRecord& rec : records) {
    if (!(rec.*field).has_value()) continue;
    s.xs.push_back(static_cast<double>(rec.epoch));
    s.ys.push_back(*(rec.*field));
  }
  if (s.xs.empty()) return std::nullopt;
  return s;
}

}  // namespace

void render_run(const std::filesystem::path& run_dir) {
  const auto records = read_telemetry_csv(run_dir / "telemetry.csv");

  {
    ChartPanel panel;
    panel.title = "Training vs perturbation loss";
    panel.y_label = "loss";
    panel.series.push_back(epoch_series(records, "train loss", &TelemetryRecord::train_loss));
    if (auto s = optional_series(records, "perturbation loss", &TelemetryRecord::perturb_loss)) {
      panel.series.push_back(std::move(*s));
    }
    write_svg(run_dir / "loss_trends.svg", chart_svg({panel}, "epoch"));
  }

  {
    ChartPanel grad;
    grad.title = "Perturbation gradient norm";
    grad.y_label = "gradient L2 norm";
    if (auto s = optional_series(records, "gradient norm", &TelemetryRecord::perturb_grad_norm)) {
      grad.series.push_back(std::move(*s));
    }
    ChartPanel dist;
    dist.title = "Perturbation distance";
    dist.y_label = "distance";
    if (auto s = optional_series(records, "distance", &TelemetryRecord::perturb_distance)) {
      dist.series.push_back(std::move(*s));
    }
    write_svg(run_dir / "grad_and_distance.svg", chart_svg({grad, dist}, "epoch"));
  }

  {
    ChartPanel panel;
    panel.title = "Training vs validation loss";
    panel.y_label = "loss";
    panel.series.push_back(epoch_series(records, "train loss", &TelemetryRecord::train_loss));
    panel.series.push_back(epoch_series(records, "val loss", &TelemetryRecord::val_loss));
    write_svg(run_dir / "train_vs_val.svg", chart_svg({panel}, "epoch"));
  }
}

}  // namespace samkit
