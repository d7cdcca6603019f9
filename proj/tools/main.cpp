// Command-line front end: simulate | fit-stations | fit-grid | regress |
// krige | ratio | report.

#include "rainscale/io.hpp"
#include "rainscale/pipeline.hpp"
#include "rainscale/scenario.hpp"
#include "rainscale/spatial.hpp"
#include "rainscale/synth.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace rainscale;

namespace {

struct CommonFlags {
  std::string config_file;
  std::string season;
  double percentile = -1.0;
  double return_period = -1.0;
  double missing_cutoff = -1.0;
  int degree = -1;
  double range_miles = -1.0;
  std::int64_t seed = -1;
  bool auto_select = false;
  std::string data_dir;
  std::string out_dir;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_file, "key=value config file");
  cmd->add_option("--season", f.season, "DJF, MAM, JJA or SON");
  cmd->add_option("--percentile", f.percentile, "threshold percentile (0.90..0.99)");
  cmd->add_option("--return-period", f.return_period, "return period in years");
  cmd->add_option("--missing-cutoff", f.missing_cutoff, "max missing-day fraction");
  cmd->add_option("--degree", f.degree, "lat/lon polynomial degree (0..4)");
  cmd->add_option("--range-miles", f.range_miles, "kriging covariance range");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_flag("--auto-select", f.auto_select, "choose regression degree by AIC");
  cmd->add_option("--data-dir", f.data_dir, "input directory (default $DATA_DIR or .)");
  cmd->add_option("--out", f.out_dir, "output directory");
}

// Config file first, CLI flags on top.
PipelineConfig resolve_config(const CommonFlags& f) {
  PipelineConfig cfg;
  if (!f.config_file.empty()) cfg = config_from_file(f.config_file);
  if (!f.season.empty()) {
    const auto s = season_from_name(f.season);
    if (!s) throw std::runtime_error("unknown season '" + f.season + "'");
    cfg.season = *s;
  }
  if (f.percentile >= 0.0) cfg.percentile = f.percentile;
  if (f.return_period >= 0.0) cfg.return_period = f.return_period;
  if (f.missing_cutoff >= 0.0) cfg.missing_cutoff = f.missing_cutoff;
  if (f.degree >= 0) cfg.degree = f.degree;
  if (f.range_miles >= 0.0) cfg.range_miles = f.range_miles;
  if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
  if (f.auto_select) cfg.auto_select = true;
  if (!f.data_dir.empty()) cfg.data_dir = f.data_dir;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  validate(cfg);
  return cfg;
}

int cmd_simulate(const CommonFlags& flags, int n_stations, int nlat, int nlon, int years,
                 double missing_rate) {
  const PipelineConfig cfg = resolve_config(flags);
  DatasetConfig dc;
  dc.n_stations = n_stations;
  dc.grid_nlat = nlat;
  dc.grid_nlon = nlon;
  dc.spacing = cfg.grid_spacing;
  dc.base.season = cfg.season;
  dc.base.threshold_quantile = cfg.percentile;
  dc.base.first_year = cfg.years.first;
  dc.base.n_years = years > 0 ? years : (cfg.years.last - cfg.years.first + 1);
  dc.base.missing_rate = missing_rate;
  dc.seed = cfg.seed;

  const Dataset data = simulate_dataset(dc);
  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);
  write_stations_csv((dir / cfg.stations_file).string(), data.stations);
  write_daily_csv((dir / cfg.daily_file).string(), data.stations);
  write_grid_daily_csv((dir / cfg.grid_file).string(), data.cells);
  std::cout << "wrote " << data.stations.size() << " stations and " << data.cells.size()
            << " cells under " << dir.string() << "\n";
  return 0;
}

int cmd_fit(const CommonFlags& flags, bool grid) {
  const PipelineConfig cfg = resolve_config(flags);
  const fs::path data_dir = cfg.resolved_data_dir();
  const fs::path out_dir = cfg.out_dir;
  fs::create_directories(out_dir);

  LoadReport report;
  std::vector<DailySeries> sites;
  if (grid) {
    sites = load_grid_data((data_dir / cfg.grid_file).string(), &report);
  } else {
    sites = load_station_data((data_dir / cfg.stations_file).string(),
                              (data_dir / cfg.daily_file).string(), &report);
  }
  const FitStage stage = fit_sites(sites, cfg);
  const std::string fits_name = grid ? "grid_fits.csv" : "station_fits.csv";
  write_fits_csv((out_dir / fits_name).string(), stage.used, cfg.season);
  {
    std::ofstream out(out_dir / (grid ? "grid_exclusions.csv" : "station_exclusions.csv"));
    out << "site_id,reason\n";
    for (const auto& [id, reason] : stage.excluded) out << id << ',' << reason << '\n';
  }
  std::cout << fits_name << ": " << stage.used.size() << " fits, " << stage.excluded.size()
            << " excluded";
  if (report.rows_rejected > 0) std::cout << ", " << report.rows_rejected << " rows rejected";
  std::cout << "\n";
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  return stage.used.empty() ? 1 : 0;
}

int cmd_regress(const CommonFlags& flags, const std::string& station_fits,
                const std::string& grid_fits) {
  const PipelineConfig cfg = resolve_config(flags);
  const fs::path out_dir = cfg.out_dir;
  fs::create_directories(out_dir);

  const auto stations = read_fits_csv(station_fits);
  const auto cells = read_fits_csv(grid_fits);
  const Pairing pairing = pair_sites(stations, cells, cfg.grid_spacing, true);
  if (pairing.records.empty()) {
    std::cerr << "regress: no station/cell pairs\n";
    return 1;
  }

  RegressionFit fit;
  if (cfg.auto_select) {
    const auto candidates = default_candidates();
    fit = select_model(pairing.records, candidates).best;
  } else {
    fit = fit_model(pairing.records, {true, true, cfg.degree});
  }
  std::ofstream out(out_dir / "regression_coeffs.csv");
  out << "season,percentile,term,estimate,se\n";
  for (int i = 0; i < fit.k; ++i) {
    out << season_name(cfg.season) << ',' << cfg.percentile << ',' << fit.names[i] << ','
        << fit.coeffs[i] << ',' << fit.coeff_ses[i] << '\n';
  }
  std::cout << "regression: n=" << fit.n << " k=" << fit.k << " degree="
            << fit.spec.latlon_degree << " aic=" << fit.aic << "\n";
  return 0;
}

int cmd_report(const CommonFlags& flags, const std::string& future_grid,
               int triples_min_stations, bool no_maps) {
  PipelineConfig cfg = resolve_config(flags);
  if (!future_grid.empty()) cfg.future_grid_file = future_grid;
  if (triples_min_stations >= 0) cfg.triples_min_stations = triples_min_stations;
  if (no_maps) cfg.write_maps = false;
  const PipelineResult result = run_pipeline(cfg);
  std::cout << "report: " << result.files.size() << " files under " << result.out_dir << "\n"
            << "  stations used " << result.counts.stations_used << "/"
            << result.counts.stations_total << ", cells used " << result.counts.cells_used
            << "/" << result.counts.cells_total << ", pairs " << result.counts.pairs << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Downscaling precipitation extremes: point-process GEV fits, "
               "return-value regression, kriging and scenario ratios"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* simulate = app.add_subcommand("simulate", "write a synthetic dataset");
  int n_stations = 50, nlat = 2, nlon = 2, years = 0;
  double missing_rate = 0.0;
  simulate->add_option("--stations", n_stations, "number of stations");
  simulate->add_option("--grid-nlat", nlat, "grid rows");
  simulate->add_option("--grid-nlon", nlon, "grid columns");
  simulate->add_option("--years", years, "season-years (default: config year range)");
  simulate->add_option("--missing-rate", missing_rate, "per-day missing probability");
  add_common_flags(simulate, flags);

  auto* fit_stations = app.add_subcommand("fit-stations", "fit the station series");
  add_common_flags(fit_stations, flags);
  auto* fit_grid = app.add_subcommand("fit-grid", "fit the grid cell series");
  add_common_flags(fit_grid, flags);

  auto* regress = app.add_subcommand("regress", "regress point returns on grid returns");
  std::string station_fits = "out/station_fits.csv", grid_fits = "out/grid_fits.csv";
  regress->add_option("--station-fits", station_fits, "station fits CSV");
  regress->add_option("--grid-fits", grid_fits, "grid fits CSV");
  add_common_flags(regress, flags);

  auto* krige = app.add_subcommand("krige", "krige held-out stations (runs the pipeline)");
  add_common_flags(krige, flags);

  auto* ratio = app.add_subcommand("ratio", "future/present return-value ratios");
  std::string future_grid;
  ratio->add_option("--future-grid", future_grid, "future grid_daily CSV")->required();
  add_common_flags(ratio, flags);

  auto* report = app.add_subcommand("report", "run the full pipeline");
  std::string report_future;
  int triples_min = -1;
  bool no_maps = false;
  report->add_option("--future-grid", report_future, "future grid_daily CSV");
  report->add_option("--triples-min-stations", triples_min,
                     "run the station-average comparison for cells with at least this many stations");
  report->add_flag("--no-maps", no_maps, "skip SVG maps");
  add_common_flags(report, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      return cmd_simulate(flags, n_stations, nlat, nlon, years, missing_rate);
    }
    if (fit_stations->parsed()) return cmd_fit(flags, false);
    if (fit_grid->parsed()) return cmd_fit(flags, true);
    if (regress->parsed()) return cmd_regress(flags, station_fits, grid_fits);
    if (krige->parsed()) return cmd_report(flags, "", -1, false);
    if (ratio->parsed()) return cmd_report(flags, future_grid, -1, false);
    if (report->parsed()) return cmd_report(flags, report_future, triples_min, no_maps);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
