#pragma once

#include <span>
#include <vector>

namespace rainscale {

/// Haversine distance on a sphere of radius 3958.8 miles.
double great_circle_miles(double lat1, double lon1, double lat2, double lon2);

struct SiteLocation {
  double lat = 0.0;
  double lon = 0.0;
};

struct VariogramBin {
  double lag_lo = 0.0;
  double lag_hi = 0.0;
  double mean_distance = 0.0;  ///< bin midpoint when the bin is empty
  double semivariance = 0.0;
  long pairs = 0;
};

struct Variogram {
  std::vector<VariogramBin> bins;
  double max_lag_miles = 0.0;
};

/// gamma(h) = sum over pairs in the bin of (r_i - r_j)^2 / (2 * count),
/// pairs binned by great-circle distance into equal-width bins up to
/// max_lag_miles.
Variogram empirical_variogram(std::span<const double> residuals,
                              std::span<const SiteLocation> locations,
                              double max_lag_miles = 600.0, int n_bins = 30);

enum class KrigingTrend { Constant, LatLon, LatLonElev };

struct KrigingModel {
  double sigma2 = 1.0;        ///< sill of the exponential covariance
  double range_miles = 155.0;
  double nugget = 0.0;
  KrigingTrend trend = KrigingTrend::LatLonElev;
};

struct KrigingObservation {
  double lat = 0.0;
  double lon = 0.0;
  double elev = 0.0;
  double value = 0.0;
};

struct KrigingTarget {
  double lat = 0.0;
  double lon = 0.0;
  double elev = 0.0;
};

struct KrigingPrediction {
  double value = 0.0;
  double se = 0.0;
};

/// Universal kriging with covariance C(h) = sigma2 exp(-h/range) plus a
/// nugget at h = 0 and a linear trend in the selected covariates. With a
/// zero nugget the predictor interpolates the observations exactly.
std::vector<KrigingPrediction> universal_krige(std::span<const KrigingObservation> obs,
                                               std::span<const KrigingTarget> targets,
                                               const KrigingModel& model);

struct PredictionComparison {
  std::vector<double> ratios;      ///< kriged/modeled per site; NaN when excluded
  std::vector<bool> excluded;      ///< modeled value <= 0 or not finite
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  std::size_t n_used = 0;
};

PredictionComparison compare_predictions(std::span<const double> kriged,
                                         std::span<const double> modeled);

}  // namespace rainscale
