#include "autolfd/svg.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace autolfd {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kPad = 48.0;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void emit_svg(const std::vector<SvgSeries>& series, const std::vector<ConstraintPoint>& markers,
              const std::string& path) {
  if (series.empty()) throw std::invalid_argument("emit_svg needs at least one series");

  double x_min = series[0].points(0, 0), x_max = x_min;
  double y_min = series[0].points(0, 1), y_max = y_min;
  auto grow = [&](double x, double y) {
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  };
  for (const auto& s : series) {
    if (s.points.cols() != 2) throw std::invalid_argument("emit_svg expects 2-D positions");
    for (int i = 0; i < s.points.rows(); ++i) grow(s.points(i, 0), s.points(i, 1));
  }
  for (const auto& m : markers) grow(m.position(0), m.position(1));

  const double span_x = std::max(x_max - x_min, 1e-9);
  const double span_y = std::max(y_max - y_min, 1e-9);
  const double scale =
      std::min((kWidth - 2.0 * kPad) / span_x, (kHeight - 2.0 * kPad) / span_y);
  auto sx = [&](double x) { return kPad + (x - x_min) * scale; };
  auto sy = [&](double y) { return kHeight - kPad - (y - y_min) * scale; };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth) << "\" height=\""
      << fmt(kHeight) << "\" viewBox=\"0 0 " << fmt(kWidth) << " " << fmt(kHeight) << "\">\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  for (const auto& s : series) {
    out << "  <polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\""
        << fmt(s.stroke_width) << "\"";
    if (s.dashed) out << " stroke-dasharray=\"6 4\"";
    out << " points=\"";
    for (int i = 0; i < s.points.rows(); ++i) {
      if (i) out << " ";
      out << fmt(sx(s.points(i, 0))) << "," << fmt(sy(s.points(i, 1)));
    }
    out << "\"/>\n";
  }

  for (const auto& m : markers) {
    out << "  <circle cx=\"" << fmt(sx(m.position(0))) << "\" cy=\"" << fmt(sy(m.position(1)))
        << "\" r=\"5\" fill=\"#2ca02c\" stroke=\"#000000\" data-x=\"" << fmt_full(m.position(0))
        << "\" data-y=\"" << fmt_full(m.position(1)) << "\"/>\n";
  }

  double legend_y = kPad * 0.5;
  for (const auto& s : series) {
    out << "  <text x=\"" << fmt(kPad) << "\" y=\"" << fmt(legend_y) << "\" fill=\"" << s.color
        << "\" font-family=\"sans-serif\" font-size=\"13\">" << s.label << "</text>\n";
    legend_y += 16.0;
  }
  out << "</svg>\n";
}

}  // namespace autolfd
