#include "rainscale/svg_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rainscale {

namespace {

struct Rgb {
  int r, g, b;
};

// Two-segment ramp: blue -> pale yellow -> red.
Rgb ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto lerp = [](int a, int b, double u) { return static_cast<int>(std::lround(a + (b - a) * u)); };
  const Rgb lo{40, 70, 190}, mid{245, 240, 180}, hi{185, 30, 30};
  if (t < 0.5) {
    const double u = t * 2.0;
    return {lerp(lo.r, mid.r, u), lerp(lo.g, mid.g, u), lerp(lo.b, mid.b, u)};
  }
  const double u = (t - 0.5) * 2.0;
  return {lerp(mid.r, hi.r, u), lerp(mid.g, hi.g, u), lerp(mid.b, hi.b, u)};
}

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string escape_xml(const std::string& s) {
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string render_map_svg(std::span<const MapPoint> points, const std::string& title) {
  if (points.empty()) throw std::invalid_argument("render_map_svg: no points");

  double lat_min = points[0].lat, lat_max = points[0].lat;
  double lon_min = points[0].lon, lon_max = points[0].lon;
  double v_min = points[0].value, v_max = points[0].value;
  for (const auto& p : points) {
    lat_min = std::min(lat_min, p.lat);
    lat_max = std::max(lat_max, p.lat);
    lon_min = std::min(lon_min, p.lon);
    lon_max = std::max(lon_max, p.lon);
    v_min = std::min(v_min, p.value);
    v_max = std::max(v_max, p.value);
  }
  const bool constant = !(v_max > v_min);

  const double plot_w = 640.0, plot_h = 420.0, margin = 40.0, legend_w = 70.0;
  const double width = plot_w + 2 * margin + legend_w;
  const double height = plot_h + 2 * margin;
  const double lon_span = std::max(lon_max - lon_min, 1e-9);
  const double lat_span = std::max(lat_max - lat_min, 1e-9);
  auto px = [&](double lon) { return margin + (lon - lon_min) / lon_span * plot_w; };
  auto py = [&](double lat) { return margin + (lat_max - lat) / lat_span * plot_h; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << " " << num(height) << "\">\n";
  if (!constant) {
    svg << "  <defs>\n    <linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n";
    for (int i = 0; i <= 8; ++i) {
      const double t = i / 8.0;
      svg << "      <stop offset=\"" << num(t * 100.0) << "%\" stop-color=\"" << hex(ramp(t))
          << "\"/>\n";
    }
    svg << "    </linearGradient>\n  </defs>\n";
  }
  svg << "  <rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg << "  <text x=\"" << num(margin) << "\" y=\"" << num(margin - 14.0)
        << "\" font-family=\"sans-serif\" font-size=\"15\">" << escape_xml(title)
        << "</text>\n";
  }
  svg << "  <rect x=\"" << num(margin) << "\" y=\"" << num(margin) << "\" width=\""
      << num(plot_w) << "\" height=\"" << num(plot_h)
      << "\" fill=\"none\" stroke=\"#888888\"/>\n";

  for (const auto& p : points) {
    const double t = constant ? 0.5 : (p.value - v_min) / (v_max - v_min);
    svg << "  <circle cx=\"" << num(px(p.lon)) << "\" cy=\"" << num(py(p.lat))
        << "\" r=\"4\" fill=\"" << hex(ramp(t)) << "\" stroke=\"#333333\" stroke-width=\"0.4\"/>\n";
  }

  // Legend: gradient bar with min/max labels, or a single swatch when all
  // values are equal.
  const double lx = margin + plot_w + 20.0;
  const double ly = margin;
  const double lh = plot_h * 0.6;
  if (constant) {
    svg << "  <rect x=\"" << num(lx) << "\" y=\"" << num(ly) << "\" width=\"16\" height=\"16\""
        << " fill=\"" << hex(ramp(0.5)) << "\" stroke=\"#333333\"/>\n";
    svg << "  <text x=\"" << num(lx) << "\" y=\"" << num(ly + 32.0)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << num(v_min) << "</text>\n";
  } else {
    svg << "  <rect x=\"" << num(lx) << "\" y=\"" << num(ly) << "\" width=\"16\" height=\""
        << num(lh) << "\" fill=\"url(#ramp)\" stroke=\"#333333\"/>\n";
    svg << "  <text x=\"" << num(lx) << "\" y=\"" << num(ly + lh + 14.0)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << num(v_min) << "</text>\n";
    svg << "  <text x=\"" << num(lx) << "\" y=\"" << num(ly - 6.0)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << num(v_max) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void render_map(std::span<const MapPoint> points, const std::string& path,
                const std::string& title) {
  const std::string svg = render_map_svg(points, title);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("render_map: cannot write " + path);
  out << svg;
}

}  // namespace rainscale
