#include "rainscale/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rainscale {

namespace {

// First day of the season for a given season-year and one-past-the-end day.
std::pair<Date, Date> season_span(Season season, int season_year) {
  switch (season) {
    case Season::DJF:
      return {make_date(season_year - 1, 12, 1), make_date(season_year, 3, 1)};
    case Season::MAM:
      return {make_date(season_year, 3, 1), make_date(season_year, 6, 1)};
    case Season::JJA:
      return {make_date(season_year, 6, 1), make_date(season_year, 9, 1)};
    case Season::SON:
      return {make_date(season_year, 9, 1), make_date(season_year, 12, 1)};
  }
  throw std::logic_error("season_span: bad season");
}

bool in_range(const DailyRecord& r, Season season, YearRange years) {
  if (season_of(r.date) != season) return false;
  const int sy = season_year(r.date);
  return sy >= years.first && sy <= years.last;
}

}  // namespace

long expected_season_days(Season season, YearRange years) {
  long total = 0;
  for (int sy = years.first; sy <= years.last; ++sy) {
    const auto [begin, end] = season_span(season, sy);
    total += (end - begin).count();
  }
  return total;
}

DailySeries extract_season(const DailySeries& s, Season season, YearRange years) {
  DailySeries out = s;
  out.records.clear();
  for (const auto& r : s.records) {
    if (in_range(r, season, years)) out.records.push_back(r);
  }
  return out;
}

double missing_fraction(const DailySeries& s, Season season, YearRange years) {
  const long expected = expected_season_days(season, years);
  if (expected <= 0) return 1.0;
  long present = 0;
  for (const auto& r : s.records) {
    if (r.value && in_range(r, season, years)) ++present;
  }
  return static_cast<double>(expected - present) / static_cast<double>(expected);
}

double percentile_threshold(const DailySeries& s, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("percentile_threshold: p must be in (0, 1)");
  }
  std::vector<double> values;
  values.reserve(s.records.size());
  for (const auto& r : s.records) {
    if (r.value) values.push_back(*r.value);
  }
  const std::size_t m = values.size();
  if (m < 20) {
    throw std::invalid_argument("percentile_threshold: fewer than 20 observations");
  }
  // ceil(p*m) with a guard against p*m landing a hair above an integer.
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(m) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, m);
  std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
  return values[rank - 1];
}

std::vector<double> decluster_runs(const DailySeries& seasonal, double threshold) {
  if (!std::isfinite(threshold)) {
    throw std::invalid_argument("decluster_runs: threshold must be finite");
  }
  std::vector<double> peaks;
  bool in_run = false;
  double run_max = 0.0;
  Date prev_date{};
  for (const auto& r : seasonal.records) {
    const bool contiguous = in_run && (r.date - prev_date).count() == 1;
    const bool exceeds = r.value && *r.value > threshold;
    if (exceeds) {
      if (contiguous) {
        run_max = std::max(run_max, *r.value);
      } else {
        if (in_run) peaks.push_back(run_max);
        run_max = *r.value;
        in_run = true;
      }
    } else if (in_run) {
      peaks.push_back(run_max);
      in_run = false;
    }
    prev_date = r.date;
  }
  if (in_run) peaks.push_back(run_max);
  return peaks;
}

double observed_period(const DailySeries& seasonal, Season season) {
  long observed = 0;
  for (const auto& r : seasonal.records) {
    if (r.value) ++observed;
  }
  if (observed == 0) {
    throw std::invalid_argument("observed_period: no observed days in season");
  }
  return static_cast<double>(observed) / season_length_days(season);
}

SeasonalPrep prepare_seasonal(const DailySeries& s, const PreprocessOptions& opt) {
  SeasonalPrep out;
  const double mf = missing_fraction(s, opt.season, opt.years);
  if (mf > opt.missing_cutoff) {
    out.exclusion = "missing_data";
    return out;
  }
  const DailySeries seasonal = extract_season(s, opt.season, opt.years);

  double threshold;
  try {
    threshold = percentile_threshold(seasonal, opt.percentile);
  } catch (const std::invalid_argument&) {
    out.exclusion = "too_few_observations";
    return out;
  }

  double t_years;
  try {
    t_years = observed_period(seasonal, opt.season);
  } catch (const std::invalid_argument&) {
    out.exclusion = "no_observed_period";
    return out;
  }

  SeasonalExceedances ex;
  ex.site_id = s.site_id;
  ex.season = opt.season;
  ex.threshold = threshold;
  ex.peaks = decluster_runs(seasonal, threshold);
  ex.t_years = t_years;
  ex.missing_frac = mf;
  for (const auto& r : seasonal.records) {
    if (r.value) ++ex.n_obs_days;
  }
  out.exceedances = std::move(ex);
  return out;
}

}  // namespace rainscale
