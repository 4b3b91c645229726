#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "asrsplit/error.hpp"
#include "asrsplit/pipeline.hpp"

namespace asrsplit {

namespace {

constexpr double kColumnWidth = 90.0;
constexpr double kLeft = 60.0;
constexpr double kTop = 40.0;
constexpr double kPlotHeight = 300.0;
constexpr double kBottom = 120.0;  // room for rotated labels

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
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

// Smallest of 1, 2, 5 x 10^k that yields at most ~6 ticks above max_v.
double tick_step(double max_v) {
  const double raw = max_v / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::string render_strip_plot(const ExperimentReport& report, const std::string& title) {
  double max_wer = 0.0;
  std::size_t n_points = 0;
  for (const auto& s : report.strategies) {
    for (const auto& o : s.splits) {
      max_wer = std::max(max_wer, o.wer);
      ++n_points;
    }
  }
  if (n_points == 0) throw DataError("nothing to plot: report holds no WER values");

  const double step = tick_step(max_wer > 0.0 ? max_wer : 1.0);
  const double y_max = step * std::ceil((max_wer > 0.0 ? max_wer : 1.0) / step);
  const double width = kLeft + kColumnWidth * static_cast<double>(report.strategies.size()) + 20.0;
  const double height = kTop + kPlotHeight + kBottom;
  auto y_of = [&](double wer) { return kTop + kPlotHeight * (1.0 - wer / y_max); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";

  svg << "<g class=\"axis\">\n";
  const double x_end = width - 20.0;
  for (double t = 0.0; t <= y_max + 1e-9; t += step) {
    const double y = y_of(t);
    svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x_end) << "\" y2=\"" << num(y)
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << num(t)
        << "</text>\n";
  }
  svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\""
      << num(kTop + kPlotHeight) << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"16\" y=\"" << num(kTop + kPlotHeight / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(kTop + kPlotHeight / 2) << ")\">WER (%)</text>\n";
  svg << "</g>\n";

  for (std::size_t i = 0; i < report.strategies.size(); ++i) {
    const auto& s = report.strategies[i];
    const double cx = kLeft + kColumnWidth * (static_cast<double>(i) + 0.5);
    svg << "<g class=\"strategy\" data-method=\"" << escape(s.summary.method) << "\">\n";
    for (const auto& o : s.splits) {
      svg << "<circle class=\"point\" cx=\"" << num(cx) << "\" cy=\"" << num(y_of(o.wer))
          << "\" r=\"3\" fill=\"#4477aa\" fill-opacity=\"0.7\"/>\n";
    }
    if (!s.splits.empty()) {
      svg << "<circle class=\"mean\" cx=\"" << num(cx) << "\" cy=\"" << num(y_of(s.summary.wer_mean))
          << "\" r=\"7\" fill=\"black\"/>\n";
    }
    const double ly = kTop + kPlotHeight + 12.0;
    svg << "<text x=\"" << num(cx) << "\" y=\"" << num(ly) << "\" text-anchor=\"end\" transform=\"rotate(-45 "
        << num(cx) << ' ' << num(ly) << ")\">" << escape(s.summary.method) << "</text>\n";
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::filesystem::path emit_plots(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  const std::string svg = render_strip_plot(report);
  std::filesystem::create_directories(out_dir);
  const auto path = out_dir / "figure.svg";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << svg;
  return path;
}

}  // namespace asrsplit
