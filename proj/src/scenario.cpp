#include "rainscale/scenario.hpp"

#include "rainscale/normal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace rainscale {

DailySeries station_average_series(std::span<const DailySeries> stations) {
  if (stations.empty()) {
    throw std::invalid_argument("station_average_series: need at least one station");
  }
  // A date is emitted if any station recorded it, and is missing only when no
  // station observed it. Values are summed in sorted order so the result is
  // exactly invariant to station reordering.
  std::map<Date, std::vector<double>> acc;
  for (const auto& s : stations) {
    for (const auto& r : s.records) {
      auto& slot = acc[r.date];
      if (r.value) slot.push_back(*r.value);
    }
  }

  DailySeries out;
  out.site_id = "station_average";
  double lat_sum = 0.0, lon_sum = 0.0;
  for (const auto& s : stations) {
    lat_sum += s.lat;
    lon_sum += s.lon;
  }
  out.lat = lat_sum / static_cast<double>(stations.size());
  out.lon = lon_sum / static_cast<double>(stations.size());
  out.records.reserve(acc.size());
  for (auto& [date, values] : acc) {
    if (values.empty()) {
      out.records.push_back({date, std::nullopt});
      continue;
    }
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    out.records.push_back({date, sum / static_cast<double>(values.size())});
  }
  return out;
}

namespace {

std::optional<double> chain_return(const DailySeries& s, const TripleOptions& opt) {
  const SeasonalPrep prep = prepare_seasonal(s, opt.prep);
  if (!prep.exceedances || prep.exceedances->peaks.size() < 10) return std::nullopt;
  const FitResult fit = fit_point_process(*prep.exceedances);
  if (!fit.converged) return std::nullopt;
  return return_level_with_se(fit, opt.return_years).value;
}

}  // namespace

TripleComparison triple_comparison(std::span<const DailySeries> stations,
                                   const DailySeries& grid_series, const TripleOptions& opt) {
  if (stations.empty()) {
    throw std::invalid_argument("triple_comparison: need at least one station");
  }
  TripleComparison out;
  out.cell_id = grid_series.site_id;

  out.station_avg_return = chain_return(station_average_series(stations), opt);
  out.grid_return = chain_return(grid_series, opt);

  double sum = 0.0;
  for (const auto& s : stations) {
    if (const auto r = chain_return(s, opt)) {
      sum += *r;
      ++out.n_stations_used;
    }
  }
  if (out.n_stations_used > 0) {
    out.mean_station_return = sum / out.n_stations_used;
  }

  if (out.grid_return && *out.grid_return > 0.0) {
    if (out.station_avg_return) out.ratio_ab = *out.station_avg_return / *out.grid_return;
    if (out.mean_station_return) out.ratio_cb = *out.mean_station_return / *out.grid_return;
  }
  return out;
}

RatioResult future_present_ratio(const ReturnLevel& future, const ReturnLevel& present) {
  if (!(present.value > 0.0)) {
    throw std::domain_error("future_present_ratio: present return value must be > 0");
  }
  if (!(future.value > 0.0)) {
    throw std::domain_error("future_present_ratio: future return value must be > 0");
  }
  RatioResult out;
  out.ratio = future.value / present.value;
  const double cv_f = future.se / future.value;
  const double cv_p = present.se / present.value;
  out.se = out.ratio * std::sqrt(cv_f * cv_f + cv_p * cv_p);
  return out;
}

SignificanceIndicator ratio_significance(const RatioResult& r, double alpha) {
  if (!(r.ratio > 0.0)) {
    throw std::invalid_argument("ratio_significance: ratio must be > 0");
  }
  const double z = normal_quantile(1.0 - alpha / 2.0);
  SignificanceIndicator ind;
  ind.plain = std::abs(r.ratio - 1.0) > z * r.se;
  // Delta method on the log scale: SE(ln R) = SE(R)/R.
  ind.log_scale = std::abs(std::log(r.ratio)) > z * r.se / r.ratio;
  return ind;
}

}  // namespace rainscale
