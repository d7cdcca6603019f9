#pragma once

#include "rainscale/series.hpp"

#include <string>
#include <vector>

namespace rainscale {

/// Row-level ingestion bookkeeping. Bad rows are rejected and counted, never
/// fatal; file-level problems (missing file, wrong header) throw.
struct LoadReport {
  long rows_ok = 0;
  long rows_rejected = 0;
  std::vector<std::string> warnings;  ///< capped; the count is authoritative

  void warn(const std::string& msg);
};

/// Joins stations.csv (station_id,lat_deg,lon_deg,elev_m) with daily.csv
/// (station_id,date,precip_tenths_mm). An empty value field or literal NA is
/// a missing day. Rows with unknown stations, bad dates, or negative values
/// are rejected; on duplicate (station, date) the first row wins. Returns
/// series sorted by station id.
std::vector<DailySeries> load_station_data(const std::string& stations_path,
                                           const std::string& daily_path,
                                           LoadReport* report = nullptr);

/// grid_daily.csv: cell_id,lat_deg,lon_deg,date,precip_tenths_mm. Cell
/// coordinates must be consistent across rows (inconsistency throws); date
/// gaps simply stay missing. Returns series sorted by cell id.
std::vector<DailySeries> load_grid_data(const std::string& path, LoadReport* report = nullptr);

void write_stations_csv(const std::string& path, const std::vector<DailySeries>& stations);
void write_daily_csv(const std::string& path, const std::vector<DailySeries>& stations);
void write_grid_daily_csv(const std::string& path, const std::vector<DailySeries>& cells);

/// Flat key=value configuration file; '#' starts a comment line. Unknown
/// keys throw so typos surface early.
std::vector<std::pair<std::string, std::string>> read_key_value_file(const std::string& path);

}  // namespace rainscale
