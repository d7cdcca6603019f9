#pragma once

#include "rainscale/evd.hpp"
#include "rainscale/series.hpp"

#include <cstdint>
#include <vector>

namespace rainscale {

/// Expected exceedances of `threshold` per season-year under the
/// point-process model: (1 + xi (u - mu)/psi)^(-1/xi).
double pp_exceedance_rate(const GevParams& p, double threshold);

/// Inverse of pp_exceedance_rate: the threshold whose exceedance rate is
/// `rate_per_year`.
double pp_threshold_for_rate(const GevParams& p, double rate_per_year);

/// Threshold at which a fraction (1 - quantile) of season days exceed, i.e.
/// the model-implied daily quantile for the given season.
double threshold_for_quantile(const GevParams& p, double quantile, Season season);

/// Draws cluster peaks from the exceedance point process: N ~ Poisson(rate*T),
/// excesses i.i.d. generalized Pareto with scale psi + xi (u - mu) and shape
/// xi, by inverse transform. Byte-identical output for a fixed seed.
std::vector<double> simulate_pp_exceedances(const GevParams& truth, double threshold,
                                            double years, std::uint64_t seed);

struct SynthConfig {
  GevParams truth{500.0, 200.0, 0.1};
  double threshold_quantile = 0.95;
  int first_year = 1950;
  int n_years = 50;  ///< season-years
  Season season = Season::DJF;
  double dry_probability = 0.6;  ///< body model: share of zero-precipitation days
  double missing_rate = 0.0;
  std::uint64_t seed = 1;
};

/// Daily series whose days above the threshold quantile follow the point
/// process for `truth` and whose body (a dry/wet split bounded below the
/// threshold) is irrelevant to tail fits by construction. Values are rounded
/// to one decimal. Missing days are recorded explicitly.
DailySeries simulate_daily_series(const SynthConfig& cfg);

struct DatasetConfig {
  int n_stations = 50;
  int grid_nlat = 2;
  int grid_nlon = 2;
  double lat0 = 30.0;   ///< southernmost cell center, degrees N
  double lon0 = -100.0; ///< westernmost cell center, degrees E
  double spacing = 2.5; ///< cell spacing, degrees
  SynthConfig base;     ///< truth template; per-site truths vary smoothly
  std::uint64_t seed = 1;
};

struct Dataset {
  std::vector<DailySeries> stations;
  std::vector<DailySeries> cells;
};

/// Multi-station, multi-cell dataset with smooth spatial variation of the GEV
/// parameters and a negative elevation effect at stations, for end-to-end
/// pipeline runs.
Dataset simulate_dataset(const DatasetConfig& cfg);

}  // namespace rainscale
