#pragma once

#include "rainscale/fitting.hpp"
#include "rainscale/io.hpp"
#include "rainscale/regression.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rainscale {

struct PipelineConfig {
  Season season = Season::DJF;
  double percentile = 0.95;
  double return_period = 100.0;
  double missing_cutoff = 0.1;
  YearRange years{1950, 1999};
  double grid_spacing = 2.5;  ///< degrees between cell centers
  int degree = 3;             ///< lat/lon polynomial degree for the regression
  bool auto_select = false;   ///< pick the degree by AIC instead of pinning it
  double range_miles = 155.0;
  std::uint64_t seed = 0;     ///< echoed in the manifest; simulate uses it
  int triples_min_stations = 0;  ///< 0 disables the station-average comparison
  std::string data_dir;          ///< empty: $DATA_DIR, else "."
  std::string out_dir = "out";
  std::string stations_file = "stations.csv";
  std::string daily_file = "daily.csv";
  std::string grid_file = "grid_daily.csv";
  std::string future_grid_file;  ///< empty disables the future/present ratio stage
  bool write_maps = true;

  /// Directory joined with the per-file names above.
  std::string resolved_data_dir() const;
};

/// Throws std::invalid_argument when a field is outside its documented range.
void validate(const PipelineConfig& cfg);

/// Applies key=value pairs from a flat config file onto defaults. Unknown
/// keys throw.
PipelineConfig config_from_file(const std::string& path);

/// One site (station or grid cell) that survived preprocessing and fitting.
struct SiteFit {
  std::string site_id;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<double> elev;
  double percentile = 0.0;
  double missing_frac = 0.0;
  FitResult fit;
  ReturnLevel level;
  double xi_z = 0.0;
  bool xi_reject_right = false;
};

struct FitStage {
  std::vector<SiteFit> used;  ///< in site-id order
  std::vector<std::pair<std::string, std::string>> excluded;  ///< id -> reason
};

/// preprocess -> fit -> return level for every site; failures become
/// exclusion records ("missing_data", "too_few_peaks", "fit_failed", ...).
FitStage fit_sites(const std::vector<DailySeries>& sites, const PipelineConfig& cfg);

void write_fits_csv(const std::string& path, const std::vector<SiteFit>& rows,
                    Season season);
std::vector<SiteFit> read_fits_csv(const std::string& path);

struct Pairing {
  std::vector<PairedRecord> records;
  std::vector<std::pair<std::string, std::string>> excluded;  ///< id -> reason
};

/// Matches fitted stations to fitted cells by grid geometry.
Pairing pair_sites(const std::vector<SiteFit>& stations, const std::vector<SiteFit>& cells,
                   double grid_spacing, bool need_elev);

struct PipelineCounts {
  long stations_total = 0;
  long stations_used = 0;
  std::map<std::string, long> station_exclusions;
  long cells_total = 0;
  long cells_used = 0;
  std::map<std::string, long> cell_exclusions;
  long pairs = 0;
  long holdout_targets = 0;
  long ratio_sites = 0;
  long triple_cells = 0;
};

struct PipelineResult {
  std::string out_dir;
  std::vector<std::string> files;  ///< names written under out_dir
  PipelineCounts counts;
};

/// Full chain: load -> preprocess -> fit (stations and cells) -> pair ->
/// regression -> residual variogram -> kriging holdout comparison ->
/// optional future/present ratios -> optional station-average triples ->
/// maps and manifest. A stage with zero usable inputs writes what it has and
/// throws a stage-named error. Identical config ⇒ byte-identical outputs.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace rainscale
