#include "cafa/chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

#include "cafa/random.hpp"

namespace cafa {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
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

void open_svg(std::ostringstream& o, double w, double h, const std::optional<std::string>& ts) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
    << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h)
    << "\" font-family=\"Helvetica, Arial, sans-serif\" font-size=\"11\">\n";
  if (ts) o << "<metadata>generated " << escape(*ts) << "</metadata>\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

// Blue-to-red ramp.
std::string shade_colour(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.5, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(44 + t * (215 - 44)));
  const int g = static_cast<int>(std::lround(123 + t * (25 - 123)));
  const int b = static_cast<int>(std::lround(182 + t * (28 - 182)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<BarSeries>& series,
                          const std::optional<std::string>& timestamp) {
  const double left = 170, right = 30, top = 52, bar_h = 12, gap = 10, plot_w = 480;
  const double group_h = static_cast<double>(std::max<std::size_t>(series.size(), 1)) * bar_h + gap;
  const double height = top + group_h * static_cast<double>(labels.size()) + 40;
  const double width = left + plot_w + right;

  double lo = 0.0, hi = 0.0;
  for (const auto& s : series) {
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi - lo <= 0.0) hi = lo + 1.0;
  auto x_of = [&](double v) { return left + (v - lo) / (hi - lo) * plot_w; };

  std::ostringstream o;
  open_svg(o, width, height, timestamp);
  o << "<text x=\"" << num(width / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(title) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double lx = left + static_cast<double>(s) * 120;
    o << "<rect x=\"" << num(lx) << "\" y=\"28\" width=\"10\" height=\"10\" fill=\""
      << kPalette[s % 5] << "\"/><text x=\"" << num(lx + 14) << "\" y=\"37\">"
      << escape(series[s].name) << "</text>\n";
  }
  const double axis_y = top + group_h * static_cast<double>(labels.size());
  o << "<line x1=\"" << num(x_of(0)) << "\" y1=\"" << num(top - 4) << "\" x2=\"" << num(x_of(0))
    << "\" y2=\"" << num(axis_y) << "\" stroke=\"#444\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    o << "<text x=\"" << num(x_of(v)) << "\" y=\"" << num(axis_y + 14)
      << "\" text-anchor=\"middle\" fill=\"#444\">" << tick(v) << "</text>\n";
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double gy = top + group_h * static_cast<double>(i);
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(gy + group_h / 2)
      << "\" text-anchor=\"end\">" << escape(labels[i]) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = i < series[s].values.size() ? series[s].values[i] : 0.0;
      const double x0 = std::min(x_of(0), x_of(v));
      const double w = std::abs(x_of(v) - x_of(0));
      o << "<rect x=\"" << num(x0) << "\" y=\"" << num(gy + static_cast<double>(s) * bar_h)
        << "\" width=\"" << num(w) << "\" height=\"" << num(bar_h - 2) << "\" fill=\""
        << kPalette[s % 5] << "\"><title>" << escape(series[s].name) << ' ' << escape(labels[i])
        << ": " << tick(v) << "</title></rect>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

std::string summary_svg(const std::vector<std::string>& labels,
                        const std::vector<SwarmPanel>& panels,
                        const std::optional<std::string>& timestamp) {
  const double left = 170, panel_w = 360, panel_gap = 40, top = 40, row_h = 26;
  const double width = left + static_cast<double>(panels.size()) * (panel_w + panel_gap);
  const double height = top + row_h * static_cast<double>(labels.size()) + 50;

  std::ostringstream o;
  open_svg(o, width, height, timestamp);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(top + row_h * (i + 0.5) + 4)
      << "\" text-anchor=\"end\">" << escape(labels[i]) << "</text>\n";
  }
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    const double x0 = left + static_cast<double>(p) * (panel_w + panel_gap);
    double m = 0.0;
    for (const auto& row : panel.points) {
      for (double v : row) m = std::max(m, std::abs(v));
    }
    if (m <= 0.0) m = 1.0;
    auto x_of = [&](double v) { return x0 + (v + m) / (2 * m) * panel_w; };
    const double bottom = top + row_h * static_cast<double>(labels.size());

    o << "<text x=\"" << num(x0 + panel_w / 2) << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-size=\"13\">" << escape(panel.title) << "</text>\n";
    o << "<line x1=\"" << num(x_of(0)) << "\" y1=\"" << num(top) << "\" x2=\"" << num(x_of(0))
      << "\" y2=\"" << num(bottom) << "\" stroke=\"#999\"/>\n";
    for (int t = -2; t <= 2; ++t) {
      const double v = m * t / 2.0;
      o << "<text x=\"" << num(x_of(v)) << "\" y=\"" << num(bottom + 14)
        << "\" text-anchor=\"middle\" fill=\"#444\">" << tick(v) << "</text>\n";
    }
    o << "<text x=\"" << num(x0 + panel_w / 2) << "\" y=\"" << num(bottom + 30)
      << "\" text-anchor=\"middle\" fill=\"#444\">attribution</text>\n";
    for (std::size_t f = 0; f < panel.points.size() && f < labels.size(); ++f) {
      const double cy = top + row_h * (f + 0.5);
      for (std::size_t i = 0; i < panel.points[f].size(); ++i) {
        const double jitter =
            (static_cast<double>(derive_seed(p, f, i) >> 11) * 0x1.0p-53 - 0.5) * (row_h - 8);
        const double s = f < panel.shade.size() && i < panel.shade[f].size() ? panel.shade[f][i]
                                                                              : 0.5;
        o << "<circle cx=\"" << num(x_of(panel.points[f][i])) << "\" cy=\"" << num(cy + jitter)
          << "\" r=\"2.5\" fill=\"" << shade_colour(s) << "\" fill-opacity=\"0.8\"/>\n";
      }
    }
  }
  const double ly = height - 12;
  o << "<text x=\"" << num(left) << "\" y=\"" << num(ly) << "\" fill=\"" << shade_colour(0)
    << "\">low feature value</text><text x=\"" << num(left + 130) << "\" y=\"" << num(ly)
    << "\" fill=\"" << shade_colour(1) << "\">high feature value</text>\n";
  o << "</svg>\n";
  return o.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace cafa
