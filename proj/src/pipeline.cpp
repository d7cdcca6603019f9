#include "rainscale/pipeline.hpp"

#include "rainscale/scenario.hpp"
#include "rainscale/spatial.hpp"
#include "rainscale/svg_map.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rainscale {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

double parse_or_throw(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (...) {
  }
  throw std::runtime_error("bad numeric value for " + what + ": '" + s + "'");
}

}  // namespace

std::string PipelineConfig::resolved_data_dir() const {
  if (!data_dir.empty()) return data_dir;
  if (const char* env = std::getenv("DATA_DIR"); env && *env) return env;
  return ".";
}

void validate(const PipelineConfig& cfg) {
  if (!(cfg.percentile >= 0.90 && cfg.percentile <= 0.99)) {
    throw std::invalid_argument("config: percentile must be in [0.90, 0.99]");
  }
  if (!(cfg.missing_cutoff > 0.0 && cfg.missing_cutoff <= 0.5)) {
    throw std::invalid_argument("config: missing_cutoff must be in (0, 0.5]");
  }
  if (cfg.degree < 0 || cfg.degree > 4) {
    throw std::invalid_argument("config: degree must be in 0..4");
  }
  if (!(cfg.return_period >= 2.0)) {
    throw std::invalid_argument("config: return_period must be >= 2");
  }
  if (cfg.years.first > cfg.years.last) {
    throw std::invalid_argument("config: year range is empty");
  }
  if (!(cfg.grid_spacing > 0.0) || !(cfg.range_miles > 0.0)) {
    throw std::invalid_argument("config: grid_spacing and range_miles must be > 0");
  }
}

PipelineConfig config_from_file(const std::string& path) {
  PipelineConfig cfg;
  for (const auto& [key, value] : read_key_value_file(path)) {
    if (key == "season") {
      const auto s = season_from_name(value);
      if (!s) throw std::runtime_error("config: unknown season '" + value + "'");
      cfg.season = *s;
    } else if (key == "percentile") {
      cfg.percentile = parse_or_throw(value, key);
    } else if (key == "return_period") {
      cfg.return_period = parse_or_throw(value, key);
    } else if (key == "missing_cutoff") {
      cfg.missing_cutoff = parse_or_throw(value, key);
    } else if (key == "year_first") {
      cfg.years.first = static_cast<int>(parse_or_throw(value, key));
    } else if (key == "year_last") {
      cfg.years.last = static_cast<int>(parse_or_throw(value, key));
    } else if (key == "grid_spacing") {
      cfg.grid_spacing = parse_or_throw(value, key);
    } else if (key == "degree") {
      cfg.degree = static_cast<int>(parse_or_throw(value, key));
    } else if (key == "auto_select") {
      cfg.auto_select = (value == "1" || value == "true" || value == "yes");
    } else if (key == "range_miles") {
      cfg.range_miles = parse_or_throw(value, key);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_or_throw(value, key));
    } else if (key == "triples_min_stations") {
      cfg.triples_min_stations = static_cast<int>(parse_or_throw(value, key));
    } else if (key == "data_dir") {
      cfg.data_dir = value;
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "stations_file") {
      cfg.stations_file = value;
    } else if (key == "daily_file") {
      cfg.daily_file = value;
    } else if (key == "grid_file") {
      cfg.grid_file = value;
    } else if (key == "future_grid_file") {
      cfg.future_grid_file = value;
    } else if (key == "write_maps") {
      cfg.write_maps = (value == "1" || value == "true" || value == "yes");
    } else {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
  }
  return cfg;
}

FitStage fit_sites(const std::vector<DailySeries>& sites, const PipelineConfig& cfg) {
  FitStage out;
  PreprocessOptions opt{cfg.season, cfg.years, cfg.percentile, cfg.missing_cutoff};
  for (const auto& site : sites) {
    const SeasonalPrep prep = prepare_seasonal(site, opt);
    if (!prep.exceedances) {
      out.excluded.emplace_back(site.site_id, prep.exclusion);
      continue;
    }
    if (prep.exceedances->peaks.size() < 10) {
      out.excluded.emplace_back(site.site_id, "too_few_peaks");
      continue;
    }
    FitResult fit = fit_point_process(*prep.exceedances);
    if (!fit.converged) {
      out.excluded.emplace_back(site.site_id, "fit_failed");
      continue;
    }
    SiteFit row;
    row.site_id = site.site_id;
    row.lat = site.lat;
    row.lon = site.lon;
    row.elev = site.elev;
    row.percentile = cfg.percentile;
    row.missing_frac = prep.exceedances->missing_frac;
    row.level = return_level_with_se(fit, cfg.return_period);
    const XiTest t = xi_test(fit, TestSide::Right, 0.05);
    row.xi_z = t.z;
    row.xi_reject_right = t.reject;
    row.fit = std::move(fit);
    out.used.push_back(std::move(row));
  }
  return out;
}

void write_fits_csv(const std::string& path, const std::vector<SiteFit>& rows, Season season) {
  std::ofstream out = open_out(path);
  out << "site_id,lat,lon,elev,season,percentile,threshold,n_peaks,t_years,missing_frac,"
         "mu,psi,xi,se_mu,se_psi,se_xi,cov_mu_psi,cov_mu_xi,cov_psi_xi,neg_loglik,"
         "return_years,return_value,return_se,xi_z,xi_reject_right\n";
  for (const auto& r : rows) {
    const auto& c = r.fit.cov;
    out << r.site_id << ',' << fmt(r.lat) << ',' << fmt(r.lon) << ',' << fmt_opt(r.elev) << ','
        << season_name(season) << ',' << fmt(r.percentile) << ',' << fmt(r.fit.threshold) << ','
        << r.fit.n_peaks << ',' << fmt(r.fit.t_years) << ',' << fmt(r.missing_frac) << ','
        << fmt(r.fit.params.mu) << ',' << fmt(r.fit.params.psi) << ',' << fmt(r.fit.params.xi)
        << ',' << fmt(std::sqrt(c(0, 0))) << ',' << fmt(std::sqrt(c(1, 1))) << ','
        << fmt(std::sqrt(c(2, 2))) << ',' << fmt(c(0, 1)) << ',' << fmt(c(0, 2)) << ','
        << fmt(c(1, 2)) << ',' << fmt(r.fit.neg_loglik) << ',' << fmt(r.level.years) << ','
        << fmt(r.level.value) << ',' << fmt(r.level.se) << ',' << fmt(r.xi_z) << ','
        << (r.xi_reject_right ? 1 : 0) << '\n';
  }
}

std::vector<SiteFit> read_fits_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");

  std::vector<SiteFit> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (line.back() == ',') f.push_back("");
    if (f.size() != 25) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
    }
    SiteFit r;
    r.site_id = f[0];
    r.lat = parse_or_throw(f[1], "lat");
    r.lon = parse_or_throw(f[2], "lon");
    if (!f[3].empty()) r.elev = parse_or_throw(f[3], "elev");
    r.percentile = parse_or_throw(f[5], "percentile");
    r.fit.threshold = parse_or_throw(f[6], "threshold");
    r.fit.n_peaks = static_cast<int>(parse_or_throw(f[7], "n_peaks"));
    r.fit.t_years = parse_or_throw(f[8], "t_years");
    r.missing_frac = parse_or_throw(f[9], "missing_frac");
    r.fit.params.mu = parse_or_throw(f[10], "mu");
    r.fit.params.psi = parse_or_throw(f[11], "psi");
    r.fit.params.xi = parse_or_throw(f[12], "xi");
    const double se_mu = parse_or_throw(f[13], "se_mu");
    const double se_psi = parse_or_throw(f[14], "se_psi");
    const double se_xi = parse_or_throw(f[15], "se_xi");
    r.fit.cov(0, 0) = se_mu * se_mu;
    r.fit.cov(1, 1) = se_psi * se_psi;
    r.fit.cov(2, 2) = se_xi * se_xi;
    r.fit.cov(0, 1) = r.fit.cov(1, 0) = parse_or_throw(f[16], "cov_mu_psi");
    r.fit.cov(0, 2) = r.fit.cov(2, 0) = parse_or_throw(f[17], "cov_mu_xi");
    r.fit.cov(1, 2) = r.fit.cov(2, 1) = parse_or_throw(f[18], "cov_psi_xi");
    r.fit.neg_loglik = parse_or_throw(f[19], "neg_loglik");
    r.fit.converged = true;
    r.level.years = parse_or_throw(f[20], "return_years");
    r.level.value = parse_or_throw(f[21], "return_value");
    r.level.se = parse_or_throw(f[22], "return_se");
    r.xi_z = parse_or_throw(f[23], "xi_z");
    r.xi_reject_right = f[24] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

Pairing pair_sites(const std::vector<SiteFit>& stations, const std::vector<SiteFit>& cells,
                   double grid_spacing, bool need_elev) {
  std::vector<GridCell> geometry;
  geometry.reserve(cells.size());
  for (const auto& c : cells) geometry.push_back({c.site_id, c.lat, c.lon});
  std::sort(geometry.begin(), geometry.end(), [](const GridCell& a, const GridCell& b) {
    return a.lat != b.lat ? a.lat < b.lat : (a.lon != b.lon ? a.lon < b.lon : a.id < b.id);
  });
  std::map<std::string, const SiteFit*> cell_by_id;
  for (const auto& c : cells) cell_by_id[c.site_id] = &c;

  Pairing out;
  for (const auto& st : stations) {
    if (need_elev && !st.elev) {
      out.excluded.emplace_back(st.site_id, "no_elevation");
      continue;
    }
    std::size_t idx;
    try {
      idx = assign_station_to_cell(st.lat, st.lon, geometry, grid_spacing / 2.0);
    } catch (const std::domain_error&) {
      out.excluded.emplace_back(st.site_id, "outside_grid");
      continue;
    }
    const SiteFit* cell = cell_by_id.at(geometry[idx].id);
    PairedRecord rec;
    rec.station_id = st.site_id;
    rec.cell_id = cell->site_id;
    rec.y_point = st.level.value;
    rec.x_grid = cell->level.value;
    rec.elev = st.elev.value_or(0.0);
    rec.lat = st.lat;
    rec.lon = st.lon;
    out.records.push_back(std::move(rec));
  }
  return out;
}

namespace {

void write_exclusions_csv(const fs::path& path,
                          const std::vector<std::tuple<std::string, std::string, std::string>>& rows) {
  std::ofstream out = open_out(path);
  out << "site_id,stage,reason\n";
  for (const auto& [id, stage, reason] : rows) {
    out << id << ',' << stage << ',' << reason << '\n';
  }
}

void write_coeffs_csv(const fs::path& path, const RegressionFit& fit, Season season,
                      double percentile) {
  std::ofstream out = open_out(path);
  out << "season,percentile,term,estimate,se\n";
  for (int i = 0; i < fit.k; ++i) {
    out << season_name(season) << ',' << fmt(percentile) << ',' << fit.names[i] << ','
        << fmt(fit.coeffs[i]) << ',' << fmt(fit.coeff_ses[i]) << '\n';
  }
}

void write_aic_csv(const fs::path& path, const std::vector<ModelSelection::Row>& table,
                   int selected_degree) {
  std::ofstream out = open_out(path);
  out << "degree,aic,selected,status\n";
  for (const auto& row : table) {
    out << row.spec.latlon_degree << ',' << (row.ok ? fmt(row.aic_value) : "") << ','
        << (row.ok && row.spec.latlon_degree == selected_degree ? 1 : 0) << ','
        << (row.ok ? "ok" : row.error) << '\n';
  }
}

void write_predictions_csv(const fs::path& path, const std::vector<PairedRecord>& records,
                           const RegressionFit& fit) {
  std::ofstream out = open_out(path);
  out << "station_id,cell_id,lat,lon,elev,grid_return,point_return,predicted_level,"
         "predicted_se,log_residual\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const PointPrediction p = predict_point_return(fit, r.x_grid, r.elev, r.lat, r.lon);
    out << r.station_id << ',' << r.cell_id << ',' << fmt(r.lat) << ',' << fmt(r.lon) << ','
        << fmt(r.elev) << ',' << fmt(r.x_grid) << ',' << fmt(r.y_point) << ','
        << fmt(p.level) << ',' << fmt(p.se) << ','
        << fmt(fit.residuals[static_cast<Eigen::Index>(i)]) << '\n';
  }
}

void write_variogram_csv(const fs::path& path, const Variogram& v) {
  std::ofstream out = open_out(path);
  out << "bin_center_miles,semivariance,pairs\n";
  for (const auto& b : v.bins) {
    out << fmt((b.lag_lo + b.lag_hi) / 2.0) << ',' << fmt(b.semivariance) << ',' << b.pairs
        << '\n';
  }
}

ordered_json config_json(const PipelineConfig& cfg) {
  ordered_json j;
  j["season"] = std::string(season_name(cfg.season));
  j["percentile"] = cfg.percentile;
  j["return_period"] = cfg.return_period;
  j["missing_cutoff"] = cfg.missing_cutoff;
  j["year_first"] = cfg.years.first;
  j["year_last"] = cfg.years.last;
  j["grid_spacing"] = cfg.grid_spacing;
  j["degree"] = cfg.degree;
  j["auto_select"] = cfg.auto_select;
  j["range_miles"] = cfg.range_miles;
  j["seed"] = cfg.seed;
  j["triples_min_stations"] = cfg.triples_min_stations;
  j["data_dir"] = cfg.resolved_data_dir();
  j["out_dir"] = cfg.out_dir;
  j["stations_file"] = cfg.stations_file;
  j["daily_file"] = cfg.daily_file;
  j["grid_file"] = cfg.grid_file;
  j["future_grid_file"] = cfg.future_grid_file;
  j["write_maps"] = cfg.write_maps;
  return j;
}

ordered_json counts_json(const PipelineCounts& c) {
  ordered_json j;
  j["stations_total"] = c.stations_total;
  j["stations_used"] = c.stations_used;
  j["station_exclusions"] = ordered_json::object();
  for (const auto& [k, v] : c.station_exclusions) j["station_exclusions"][k] = v;
  j["cells_total"] = c.cells_total;
  j["cells_used"] = c.cells_used;
  j["cell_exclusions"] = ordered_json::object();
  for (const auto& [k, v] : c.cell_exclusions) j["cell_exclusions"][k] = v;
  j["pairs"] = c.pairs;
  j["holdout_targets"] = c.holdout_targets;
  j["ratio_sites"] = c.ratio_sites;
  j["triple_cells"] = c.triple_cells;
  return j;
}

struct ManifestWriter {
  fs::path out_dir;
  ordered_json body;
  std::vector<std::string> files;

  void note_file(const std::string& name) { files.push_back(name); }

  void finish(const std::string& status, const PipelineCounts& counts) {
    body["status"] = status;
    body["counts"] = counts_json(counts);
    body["outputs"] = files;
    std::ofstream out = open_out(out_dir / "manifest.json");
    out << body.dump(2) << '\n';
  }
};

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  validate(cfg);
  const fs::path data_dir = cfg.resolved_data_dir();
  const fs::path out_dir = cfg.out_dir;
  fs::create_directories(out_dir);

  PipelineResult result;
  result.out_dir = out_dir.string();
  PipelineCounts& counts = result.counts;

  ManifestWriter manifest{out_dir, ordered_json{}, {}};
  manifest.body["tool"] = "rainscale";
  manifest.body["config"] = config_json(cfg);

  std::vector<std::tuple<std::string, std::string, std::string>> exclusions;
  auto abort_stage = [&](const std::string& stage, const std::string& why) -> std::runtime_error {
    write_exclusions_csv(out_dir / "exclusions.csv", exclusions);
    manifest.note_file("exclusions.csv");
    manifest.finish("aborted: " + stage, counts);
    manifest.note_file("manifest.json");
    return std::runtime_error(stage + ": " + why);
  };

  // Load.
  LoadReport station_report, grid_report;
  const auto stations = load_station_data((data_dir / cfg.stations_file).string(),
                                          (data_dir / cfg.daily_file).string(), &station_report);
  const auto cells = load_grid_data((data_dir / cfg.grid_file).string(), &grid_report);
  counts.stations_total = static_cast<long>(stations.size());
  counts.cells_total = static_cast<long>(cells.size());
  {
    ordered_json inputs;
    inputs["station_rows_ok"] = station_report.rows_ok;
    inputs["station_rows_rejected"] = station_report.rows_rejected;
    inputs["grid_rows_ok"] = grid_report.rows_ok;
    inputs["grid_rows_rejected"] = grid_report.rows_rejected;
    manifest.body["inputs"] = inputs;
  }

  // Fit stations and cells.
  const FitStage station_stage = fit_sites(stations, cfg);
  for (const auto& [id, reason] : station_stage.excluded) {
    exclusions.emplace_back(id, "fit-stations", reason);
    ++counts.station_exclusions[reason];
  }
  counts.stations_used = static_cast<long>(station_stage.used.size());
  if (station_stage.used.empty()) {
    throw abort_stage("fit-stations", "no usable stations (see exclusions.csv)");
  }
  write_fits_csv((out_dir / "station_fits.csv").string(), station_stage.used, cfg.season);
  manifest.note_file("station_fits.csv");

  const FitStage cell_stage = fit_sites(cells, cfg);
  for (const auto& [id, reason] : cell_stage.excluded) {
    exclusions.emplace_back(id, "fit-grid", reason);
    ++counts.cell_exclusions[reason];
  }
  counts.cells_used = static_cast<long>(cell_stage.used.size());
  if (cell_stage.used.empty()) {
    throw abort_stage("fit-grid", "no usable grid cells (see exclusions.csv)");
  }
  write_fits_csv((out_dir / "grid_fits.csv").string(), cell_stage.used, cfg.season);
  manifest.note_file("grid_fits.csv");

  // Pair stations with cells. After this stage stations_used means
  // "contributes to the regression", so the exclusion counts partition the
  // station total exactly.
  Pairing pairing = pair_sites(station_stage.used, cell_stage.used, cfg.grid_spacing, true);
  for (const auto& [id, reason] : pairing.excluded) {
    exclusions.emplace_back(id, "pairing", reason);
    ++counts.station_exclusions[reason];
  }
  counts.pairs = static_cast<long>(pairing.records.size());
  counts.stations_used = counts.pairs;
  if (pairing.records.empty()) {
    throw abort_stage("pairing", "no station/cell pairs");
  }

  // Regression.
  RegressionFit reg;
  std::vector<ModelSelection::Row> aic_table;
  try {
    if (cfg.auto_select) {
      const auto candidates = default_candidates();
      ModelSelection sel = select_model(pairing.records, candidates);
      reg = std::move(sel.best);
      aic_table = std::move(sel.table);
    } else {
      reg = fit_model(pairing.records, {true, true, cfg.degree});
      ModelSelection::Row row;
      row.spec = reg.spec;
      row.aic_value = reg.aic;
      row.ok = true;
      aic_table.push_back(row);
    }
  } catch (const std::exception& e) {
    throw abort_stage("regression", e.what());
  }
  write_coeffs_csv(out_dir / "regression_coeffs.csv", reg, cfg.season, cfg.percentile);
  manifest.note_file("regression_coeffs.csv");
  write_aic_csv(out_dir / "regression_aic.csv", aic_table, reg.spec.latlon_degree);
  manifest.note_file("regression_aic.csv");
  write_predictions_csv(out_dir / "predictions.csv", pairing.records, reg);
  manifest.note_file("predictions.csv");

  // Residual variogram.
  {
    std::vector<double> resid(pairing.records.size());
    std::vector<SiteLocation> locs(pairing.records.size());
    for (std::size_t i = 0; i < pairing.records.size(); ++i) {
      resid[i] = reg.residuals[static_cast<Eigen::Index>(i)];
      locs[i] = {pairing.records[i].lat, pairing.records[i].lon};
    }
    if (resid.size() >= 2) {
      write_variogram_csv(out_dir / "variogram.csv", empirical_variogram(resid, locs));
      manifest.note_file("variogram.csv");
    }
  }

  // Kriging at held-out stations (excluded at preprocess/fit), compared with
  // the regression predictions.
  {
    std::map<std::string, const DailySeries*> meta;
    for (const auto& s : stations) meta[s.site_id] = &s;
    std::map<std::string, const SiteFit*> cell_by_id;
    std::vector<GridCell> geometry;
    for (const auto& c : cell_stage.used) {
      cell_by_id[c.site_id] = &c;
      geometry.push_back({c.site_id, c.lat, c.lon});
    }
    std::sort(geometry.begin(), geometry.end(), [](const GridCell& a, const GridCell& b) {
      return a.lat != b.lat ? a.lat < b.lat : (a.lon != b.lon ? a.lon < b.lon : a.id < b.id);
    });

    struct Holdout {
      std::string id;
      KrigingTarget target;
      double modeled;
    };
    std::vector<Holdout> holdouts;
    for (const auto& [id, reason] : station_stage.excluded) {
      const DailySeries* s = meta.at(id);
      if (!s->elev) continue;
      std::size_t idx;
      try {
        idx = assign_station_to_cell(s->lat, s->lon, geometry, cfg.grid_spacing / 2.0);
      } catch (const std::domain_error&) {
        continue;
      }
      const SiteFit* cell = cell_by_id.at(geometry[idx].id);
      const PointPrediction p =
          predict_point_return(reg, cell->level.value, *s->elev, s->lat, s->lon);
      holdouts.push_back({id, {s->lat, s->lon, *s->elev}, p.level});
    }
    counts.holdout_targets = static_cast<long>(holdouts.size());

    if (!holdouts.empty()) {
      std::vector<KrigingObservation> obs;
      obs.reserve(station_stage.used.size());
      for (const auto& st : station_stage.used) {
        obs.push_back({st.lat, st.lon, st.elev.value_or(0.0), st.level.value});
      }
      // Sill from the trend-regression residual variance; exact interpolation
      // (zero nugget) matches the comparison use-case.
      KrigingModel model;
      model.range_miles = cfg.range_miles;
      model.nugget = 0.0;
      model.trend = KrigingTrend::LatLonElev;
      {
        Eigen::MatrixXd f(obs.size(), 4);
        Eigen::VectorXd z(obs.size());
        for (std::size_t i = 0; i < obs.size(); ++i) {
          const auto ei = static_cast<Eigen::Index>(i);
          f(ei, 0) = 1.0;
          f(ei, 1) = obs[i].lat;
          f(ei, 2) = obs[i].lon;
          f(ei, 3) = obs[i].elev;
          z[ei] = obs[i].value;
        }
        const Eigen::VectorXd beta = f.colPivHouseholderQr().solve(z);
        const Eigen::VectorXd resid = z - f * beta;
        const auto dof = static_cast<double>(std::max<Eigen::Index>(1, f.rows() - f.cols()));
        model.sigma2 = std::max(resid.squaredNorm() / dof, 1e-12);
      }

      std::vector<KrigingTarget> targets;
      targets.reserve(holdouts.size());
      for (const auto& h : holdouts) targets.push_back(h.target);

      try {
        const auto kriged = universal_krige(obs, targets, model);
        std::vector<double> kriged_values(kriged.size()), modeled(kriged.size());
        for (std::size_t i = 0; i < kriged.size(); ++i) {
          kriged_values[i] = kriged[i].value;
          modeled[i] = holdouts[i].modeled;
        }
        const PredictionComparison cmp = compare_predictions(kriged_values, modeled);

        std::ofstream out = open_out(out_dir / "kriging.csv");
        out << "site_id,prediction,se\n";
        for (std::size_t i = 0; i < kriged.size(); ++i) {
          out << holdouts[i].id << ',' << fmt(kriged[i].value) << ',' << fmt(kriged[i].se)
              << '\n';
        }
        manifest.note_file("kriging.csv");

        std::ofstream cmp_out = open_out(out_dir / "kriging_compare.csv");
        cmp_out << "site_id,kriged,modeled,ratio,excluded\n";
        for (std::size_t i = 0; i < kriged.size(); ++i) {
          cmp_out << holdouts[i].id << ',' << fmt(kriged_values[i]) << ',' << fmt(modeled[i])
                  << ',' << (cmp.excluded[i] ? "" : fmt(cmp.ratios[i])) << ','
                  << (cmp.excluded[i] ? 1 : 0) << '\n';
        }
        manifest.note_file("kriging_compare.csv");

        ordered_json kj;
        kj["sigma2"] = model.sigma2;
        kj["range_miles"] = model.range_miles;
        kj["nugget"] = model.nugget;
        kj["ratio_q05"] = cmp.q05;
        kj["ratio_q50"] = cmp.q50;
        kj["ratio_q95"] = cmp.q95;
        manifest.body["kriging"] = kj;
      } catch (const std::exception& e) {
        manifest.body["kriging"] = ordered_json{{"skipped", e.what()}};
      }
    }
  }

  // Future/present ratio stage.
  if (!cfg.future_grid_file.empty()) {
    LoadReport future_report;
    const auto future_cells =
        load_grid_data((data_dir / cfg.future_grid_file).string(), &future_report);
    const FitStage future_stage = fit_sites(future_cells, cfg);
    for (const auto& [id, reason] : future_stage.excluded) {
      exclusions.emplace_back(id, "fit-grid-future", reason);
    }
    if (future_stage.used.empty()) {
      throw abort_stage("fit-grid-future", "no usable future grid cells");
    }
    write_fits_csv((out_dir / "grid_fits_future.csv").string(), future_stage.used, cfg.season);
    manifest.note_file("grid_fits_future.csv");

    std::map<std::string, const SiteFit*> future_by_id;
    for (const auto& c : future_stage.used) future_by_id[c.site_id] = &c;
    std::map<std::string, const SiteFit*> present_by_id;
    for (const auto& c : cell_stage.used) present_by_id[c.site_id] = &c;

    struct RatioRow {
      std::string id;
      RatioResult ratio;
      SignificanceIndicator sig;
    };
    std::vector<RatioRow> rows;
    for (const auto& rec : pairing.records) {
      const auto fut = future_by_id.find(rec.cell_id);
      if (fut == future_by_id.end()) {
        exclusions.emplace_back(rec.station_id, "ratio", "future_cell_missing");
        continue;
      }
      const PointPrediction present =
          predict_point_return(reg, rec.x_grid, rec.elev, rec.lat, rec.lon);
      const PointPrediction future = predict_point_return(reg, fut->second->level.value,
                                                          rec.elev, rec.lat, rec.lon);
      RatioRow row;
      row.id = rec.station_id;
      row.ratio = future_present_ratio({future.level, future.se, cfg.return_period},
                                       {present.level, present.se, cfg.return_period});
      row.ratio.site_id = rec.station_id;
      row.sig = ratio_significance(row.ratio, 0.05);
      rows.push_back(std::move(row));
    }
    counts.ratio_sites = static_cast<long>(rows.size());
    if (rows.empty()) {
      throw abort_stage("ratio", "no sites with both present and future predictions");
    }

    // Flag (never drop) implausibly large ratio SEs.
    std::vector<double> ses;
    ses.reserve(rows.size());
    for (const auto& r : rows) ses.push_back(r.ratio.se);
    std::sort(ses.begin(), ses.end());
    const double median_se = ses[ses.size() / 2];
    const double extreme_cut = 10.0 * std::max(median_se, 1e-300);

    std::ofstream out = open_out(out_dir / "ratios.csv");
    out << "site_id,ratio,se,sig_plain,sig_log,extreme_se\n";
    for (const auto& r : rows) {
      out << r.id << ',' << fmt(r.ratio.ratio) << ',' << fmt(r.ratio.se) << ','
          << (r.sig.plain ? 1 : 0) << ',' << (r.sig.log_scale ? 1 : 0) << ','
          << (r.ratio.se > extreme_cut ? 1 : 0) << '\n';
    }
    manifest.note_file("ratios.csv");
  }

  // Station-average triple comparison for well-populated cells.
  if (cfg.triples_min_stations > 0) {
    std::vector<GridCell> geometry;
    for (const auto& c : cells) geometry.push_back({c.site_id, c.lat, c.lon});
    std::sort(geometry.begin(), geometry.end(), [](const GridCell& a, const GridCell& b) {
      return a.lat != b.lat ? a.lat < b.lat : (a.lon != b.lon ? a.lon < b.lon : a.id < b.id);
    });
    std::map<std::string, std::vector<const DailySeries*>> by_cell;
    for (const auto& s : stations) {
      try {
        const std::size_t idx =
            assign_station_to_cell(s.lat, s.lon, geometry, cfg.grid_spacing / 2.0);
        by_cell[geometry[idx].id].push_back(&s);
      } catch (const std::domain_error&) {
      }
    }
    std::map<std::string, const DailySeries*> cell_series;
    for (const auto& c : cells) cell_series[c.site_id] = &c;

    std::ofstream out = open_out(out_dir / "triples.csv");
    out << "cell_id,lat,lon,n_stations,n_stations_used,a_station_avg,b_grid,c_station_mean,"
           "ratio_ab,ratio_cb\n";
    TripleOptions topt;
    topt.prep = {cfg.season, cfg.years, cfg.percentile, cfg.missing_cutoff};
    topt.return_years = cfg.return_period;
    for (const auto& [cell_id, members] : by_cell) {
      if (static_cast<int>(members.size()) < cfg.triples_min_stations) continue;
      std::vector<DailySeries> local;
      local.reserve(members.size());
      for (const auto* m : members) local.push_back(*m);
      const TripleComparison t = triple_comparison(local, *cell_series.at(cell_id), topt);
      auto opt_fmt = [](const std::optional<double>& v) { return v ? fmt(*v) : ""; };
      out << cell_id << ',' << fmt(cell_series.at(cell_id)->lat) << ','
          << fmt(cell_series.at(cell_id)->lon) << ',' << members.size() << ','
          << t.n_stations_used << ',' << opt_fmt(t.station_avg_return) << ','
          << opt_fmt(t.grid_return) << ',' << opt_fmt(t.mean_station_return) << ','
          << opt_fmt(t.ratio_ab) << ',' << opt_fmt(t.ratio_cb) << '\n';
      ++counts.triple_cells;
    }
    manifest.note_file("triples.csv");
  }

  // Maps.
  if (cfg.write_maps) {
    std::vector<MapPoint> pts;
    for (const auto& st : station_stage.used) pts.push_back({st.lat, st.lon, st.level.value});
    render_map(pts, (out_dir / "station_return_map.svg").string(),
               "Station return values (tenths of mm)");
    manifest.note_file("station_return_map.svg");
    pts.clear();
    for (const auto& c : cell_stage.used) pts.push_back({c.lat, c.lon, c.level.value});
    render_map(pts, (out_dir / "grid_return_map.svg").string(),
               "Grid return values (tenths of mm)");
    manifest.note_file("grid_return_map.svg");
  }

  write_exclusions_csv(out_dir / "exclusions.csv", exclusions);
  manifest.note_file("exclusions.csv");
  manifest.finish("ok", counts);
  manifest.note_file("manifest.json");

  result.files = manifest.files;
  return result;
}

}  // namespace rainscale
