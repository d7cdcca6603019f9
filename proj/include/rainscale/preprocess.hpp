#pragma once

#include "rainscale/series.hpp"

namespace rainscale {

/// Inclusive range of season-years.
struct YearRange {
  int first = 0;
  int last = 0;
};

/// Per-site, per-season exceedance data ready for point-process fitting.
struct SeasonalExceedances {
  std::string site_id;
  Season season = Season::DJF;
  double threshold = 0.0;
  std::vector<double> peaks;  ///< cluster maxima, all strictly > threshold
  double t_years = 0.0;       ///< observed period in season-years
  long n_obs_days = 0;        ///< non-missing season days
  double missing_frac = 0.0;
};

/// Calendar count of season days (Feb 29 included for DJF) over the range.
long expected_season_days(Season season, YearRange years);

/// Restrict a series to one season and season-year range. December of year Y
/// is assigned to season-year Y+1, so a December 1949 day belongs to winter
/// 1950 and December 1999 falls outside a 1950-1999 winter range.
DailySeries extract_season(const DailySeries& s, Season season, YearRange years);

/// Missing season days / expected season days over the range. Days absent
/// from the record count as missing.
double missing_fraction(const DailySeries& s, Season season, YearRange years);

/// Order statistic at rank ceil(p*m) among the m non-missing values (zeros
/// included): the smallest value with at least fraction p of observations at
/// or below it. Requires at least 20 non-missing observations.
double percentile_threshold(const DailySeries& s, double p);

/// Runs declustering: maximal runs of consecutive calendar days with value
/// strictly above the threshold; each run contributes its maximum. A
/// non-exceedance day, a missing day, or any gap in the calendar (which is
/// how season and season-year boundaries appear in an extracted series)
/// terminates a run.
std::vector<double> decluster_runs(const DailySeries& seasonal, double threshold);

/// Observed period in season-years: non-missing season days divided by the
/// nominal season length. Throws when no days were observed.
double observed_period(const DailySeries& seasonal, Season season);

struct PreprocessOptions {
  Season season = Season::DJF;
  YearRange years;
  double percentile = 0.95;
  double missing_cutoff = 0.1;  ///< sites with missing fraction > cutoff are excluded
};

/// Outcome of the preprocessing chain for one site. `exclusion` is empty when
/// the site is usable, otherwise one of "missing_data", "too_few_observations",
/// "no_observed_period".
struct SeasonalPrep {
  std::optional<SeasonalExceedances> exceedances;
  std::string exclusion;
};

SeasonalPrep prepare_seasonal(const DailySeries& s, const PreprocessOptions& opt);

}  // namespace rainscale
