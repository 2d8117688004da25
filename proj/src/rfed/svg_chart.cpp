#include "rfed/svg_chart.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rfed {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string line_chart_svg(const ChartSpec& spec) {
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  auto transform_y = [&](double y) { return spec.log_y ? std::log10(y) : y; };
  for (const auto& s : spec.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.y[i]) || (spec.log_y && s.y[i] <= 0.0)) continue;
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, transform_y(s.y[i]));
      y_max = std::max(y_max, transform_y(s.y[i]));
    }
  if (!std::isfinite(x_min)) x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  if (x_max == x_min) x_max = x_min + 1.0;
  if (spec.log_y) {
    y_min = std::floor(y_min);
    y_max = std::ceil(y_max);
  }
  if (y_max == y_min) y_max = y_min + 1.0;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double ty) { return kTop + (1.0 - (ty - y_min) / (y_max - y_min)) * plot_h; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
      kWidth, kHeight, kWidth / 2, escape(spec.title));
  svg += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
      kTop, plot_w, plot_h);

  // y ticks: decades in log mode, five even steps otherwise.
  const int y_ticks = spec.log_y ? std::min(10, static_cast<int>(y_max - y_min)) : 5;
  for (int i = 0; i <= y_ticks; ++i) {
    const double ty = y_min + (y_max - y_min) * i / y_ticks;
    const std::string label = spec.log_y ? fmt::format("1e{:.0f}", ty) : fmt::format("{:.3g}", ty);
    svg += fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#ddd\"/>\n"
        "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5}</text>\n",
        kLeft, py(ty), kLeft + plot_w, kLeft - 6, py(ty) + 4, label);
  }
  for (int i = 0; i <= 5; ++i) {
    const double x = x_min + (x_max - x_min) * i / 5;
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{:.4g}</text>\n", px(x),
                       kTop + plot_h + 18, x);
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                     kLeft + plot_w / 2, kHeight - 16, escape(spec.x_label));
  svg += fmt::format(
      "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
      kTop + plot_h / 2, escape(spec.y_label));

  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& series = spec.series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    std::string points;
    for (std::size_t i = 0; i < std::min(series.x.size(), series.y.size()); ++i) {
      const double y = series.y[i];
      if (!std::isfinite(y) || (spec.log_y && y <= 0.0)) continue;
      points += fmt::format("{:.2f},{:.2f} ", px(series.x[i]), py(transform_y(y)));
    }
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                       color, points);
    const double ly = kTop + 16 + 16 * static_cast<double>(s);
    svg += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n"
        "<text x=\"{4}\" y=\"{5}\">{6}</text>\n",
        kLeft + plot_w - 130, ly, kLeft + plot_w - 110, color, kLeft + plot_w - 104, ly + 4,
        escape(series.name));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace rfed
