#pragma once

#include <span>
#include <string>

namespace rainscale {

struct MapPoint {
  double lat = 0.0;
  double lon = 0.0;
  double value = 0.0;
};

/// Standalone SVG scatter map with a color ramp and legend.
std::string render_map_svg(std::span<const MapPoint> points, const std::string& title = "");

/// render_map_svg written to a file. Throws on empty input or write failure.
void render_map(std::span<const MapPoint> points, const std::string& path,
                const std::string& title = "");

}  // namespace rainscale
