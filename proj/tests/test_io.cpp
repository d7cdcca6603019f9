#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rainscale/io.hpp"
#include "rainscale/svg_map.hpp"
#include "rainscale/synth.hpp"

#include <filesystem>
#include <fstream>

using namespace rainscale;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("rainscale_io_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("well-formed two-station fixture loads") {
  TempDir dir;
  write_file(dir.path / "stations.csv",
             "station_id,lat_deg,lon_deg,elev_m\n"
             "s1,35.0000,-97.5000,300\n"
             "s2,36.0000,-96.0000,\n");
  write_file(dir.path / "daily.csv",
             "station_id,date,precip_tenths_mm\n"
             "s1,1990-01-01,12.0\n"
             "s1,1990-01-02,\n"
             "s1,1990-01-03,NA\n"
             "s2,1990-01-01,0.0\n");
  LoadReport rep;
  const auto series = load_station_data((dir.path / "stations.csv").string(),
                                        (dir.path / "daily.csv").string(), &rep);
  REQUIRE(series.size() == 2);
  CHECK(series[0].site_id == "s1");
  CHECK(series[0].records.size() == 3);
  CHECK(series[0].records[0].value == 12.0);
  CHECK(!series[0].records[1].value.has_value());
  CHECK(!series[0].records[2].value.has_value());
  CHECK(series[0].elev == 300.0);
  CHECK(!series[1].elev.has_value());
  CHECK(rep.rows_rejected == 0);
}

TEST_CASE("bad rows are rejected and counted") {
  TempDir dir;
  write_file(dir.path / "stations.csv",
             "station_id,lat_deg,lon_deg,elev_m\n"
             "s1,35.0,-97.5,300\n");
  write_file(dir.path / "daily.csv",
             "station_id,date,precip_tenths_mm\n"
             "s1,1990-01-01,12.0\n"
             "s1,1990-01-01,99.0\n"   // duplicate day: first kept
             "ghost,1990-01-01,5.0\n" // not in metadata
             "s1,1990-13-01,5.0\n"    // bad date
             "s1,1990-01-02,-4.0\n"); // negative value
  LoadReport rep;
  const auto series = load_station_data((dir.path / "stations.csv").string(),
                                        (dir.path / "daily.csv").string(), &rep);
  REQUIRE(series.size() == 1);
  REQUIRE(series[0].records.size() == 1);
  CHECK(series[0].records[0].value == 12.0);
  CHECK(rep.rows_rejected == 4);
  CHECK(rep.warnings.size() == 4);
}

TEST_CASE("grid loader enforces consistent cell coordinates") {
  TempDir dir;
  write_file(dir.path / "grid.csv",
             "cell_id,lat_deg,lon_deg,date,precip_tenths_mm\n"
             "c1,35.0,-97.5,1990-01-01,10.0\n"
             "c1,35.0,-97.5,1990-01-03,20.0\n"  // date gap: implicit missing day
             "c2,37.5,-97.5,1990-01-01,5.0\n"
             "c3,40.0,-97.5,1990-01-01,1.0\n"
             "c4,42.5,-97.5,1990-01-01,2.0\n");
  const auto cells = load_grid_data((dir.path / "grid.csv").string());
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].records.size() == 2);

  write_file(dir.path / "bad.csv",
             "cell_id,lat_deg,lon_deg,date,precip_tenths_mm\n"
             "c1,35.0,-97.5,1990-01-01,10.0\n"
             "c1,36.0,-97.5,1990-01-02,10.0\n");
  CHECK_THROWS_WITH_AS(load_grid_data((dir.path / "bad.csv").string()),
                       doctest::Contains("inconsistent"), std::runtime_error);
}

TEST_CASE("daily series round-trips through the CSV pair") {
  TempDir dir;
  DatasetConfig dc;
  dc.n_stations = 4;
  dc.grid_nlat = 2;
  dc.grid_nlon = 2;
  dc.base.n_years = 3;
  dc.base.missing_rate = 0.15;
  dc.seed = 99;
  const Dataset data = simulate_dataset(dc);

  write_stations_csv((dir.path / "stations.csv").string(), data.stations);
  write_daily_csv((dir.path / "daily.csv").string(), data.stations);
  write_grid_daily_csv((dir.path / "grid.csv").string(), data.cells);

  const auto stations = load_station_data((dir.path / "stations.csv").string(),
                                          (dir.path / "daily.csv").string());
  REQUIRE(stations.size() == data.stations.size());
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const auto& a = data.stations[i];
    const auto& b = stations[i];
    CHECK(a.site_id == b.site_id);
    CHECK(a.lat == b.lat);
    CHECK(a.lon == b.lon);
    CHECK(a.elev == b.elev);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t j = 0; j < a.records.size(); ++j) {
      CHECK(a.records[j].date == b.records[j].date);
      CHECK(a.records[j].value == b.records[j].value);
    }
  }

  const auto cells = load_grid_data((dir.path / "grid.csv").string());
  REQUIRE(cells.size() == data.cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CHECK(cells[i].site_id == data.cells[i].site_id);
    CHECK(cells[i].records.size() == data.cells[i].records.size());
  }
}

TEST_CASE("key=value config files parse") {
  TempDir dir;
  write_file(dir.path / "run.cfg",
             "# comment\n"
             "season = MAM\n"
             "percentile=0.97\n"
             "\n"
             "out_dir = results\n");
  const auto kv = read_key_value_file((dir.path / "run.cfg").string());
  REQUIRE(kv.size() == 3);
  CHECK(kv[0].first == "season");
  CHECK(kv[0].second == "MAM");
  CHECK(kv[1].second == "0.97");
  CHECK(kv[2].second == "results");
}

TEST_CASE("svg map structure") {
  const MapPoint pts[] = {{35.0, -100.0, 1.0}, {36.0, -99.0, 2.0}, {37.0, -98.0, 3.0}};
  const std::string svg = render_map_svg(pts, "three points");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
  std::size_t circles = 0, pos = 0;
  while ((pos = svg.find("<circle", pos)) != std::string::npos) {
    ++circles;
    pos += 7;
  }
  CHECK(circles == 3);
  CHECK(svg.find("linearGradient") != std::string::npos);

  // Constant values: single-color legend, no gradient.
  const MapPoint flat[] = {{35.0, -100.0, 2.0}, {36.0, -99.0, 2.0}};
  const std::string svg2 = render_map_svg(flat, "");
  CHECK(svg2.find("linearGradient") == std::string::npos);

  CHECK_THROWS_AS(render_map_svg({}, ""), std::invalid_argument);
}
