#pragma once

#include "rainscale/fitting.hpp"

#include <optional>
#include <span>

namespace rainscale {

/// Per-day mean over stations with non-missing values (zeros included); a day
/// is missing only when every station is missing that day.
DailySeries station_average_series(std::span<const DailySeries> stations);

struct TripleOptions {
  PreprocessOptions prep;
  double return_years = 100.0;
};

/// Three routes to a cell's n-year return value: (a) fit on the
/// station-averaged daily series, (b) fit on the grid cell series, (c) mean
/// of the individual station return values. Failed fits leave the entry
/// empty.
struct TripleComparison {
  std::string cell_id;
  std::optional<double> station_avg_return;   ///< (a)
  std::optional<double> grid_return;          ///< (b)
  std::optional<double> mean_station_return;  ///< (c)
  int n_stations_used = 0;
  std::optional<double> ratio_ab;
  std::optional<double> ratio_cb;
};

TripleComparison triple_comparison(std::span<const DailySeries> stations,
                                   const DailySeries& grid_series, const TripleOptions& opt);

/// Future/present return-value ratio with its delta-method SE (the two
/// estimates are treated as independent).
struct RatioResult {
  std::string site_id;
  double ratio = 0.0;
  double se = 0.0;
};

RatioResult future_present_ratio(const ReturnLevel& future, const ReturnLevel& present);

struct SignificanceIndicator {
  bool plain = false;      ///< two-sided normal interval for R excludes 1
  bool log_scale = false;  ///< two-sided interval for ln R excludes 0
};

SignificanceIndicator ratio_significance(const RatioResult& r, double alpha = 0.05);

}  // namespace rainscale
