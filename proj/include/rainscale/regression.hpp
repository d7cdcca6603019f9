#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rainscale {

/// One station matched to its enclosing grid cell.
struct PairedRecord {
  std::string station_id;
  std::string cell_id;
  double y_point = 0.0;  ///< station n-year return, tenths of mm (> 0)
  double x_grid = 0.0;   ///< cell n-year return, tenths of mm
  double elev = 0.0;     ///< meters
  double lat = 0.0;
  double lon = 0.0;
};

/// Which columns enter the design: intercept always; grid return and
/// elevation optionally; the full lat/lon polynomial (all monomials
/// lat^a lon^b with 1 <= a+b <= degree) when degree > 0.
struct DesignSpec {
  bool include_grid = true;
  bool include_elev = true;
  int latlon_degree = 0;  ///< 0..4
};

struct GridCell {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
};

/// Index into `cells` of the cell containing the station (centers +/- half
/// spacing on each axis). Boundary ties go to the earliest cell in the list,
/// so a list sorted by (lat, lon) gives ties to the smaller index. Throws
/// std::domain_error when no cell contains the station.
std::size_t assign_station_to_cell(double lat, double lon, std::span<const GridCell> cells,
                                   double half_spacing);

struct Design {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;  ///< log point returns
  std::vector<std::string> names;
  DesignSpec spec;
  double lat_center = 0.0;
  double lon_center = 0.0;
};

/// y = ln(y_point); lat/lon are centered (sample means unless explicit
/// centers are given) before forming polynomial terms.
Design build_design(std::span<const PairedRecord> records, const DesignSpec& spec,
                    std::optional<std::pair<double, double>> centers = std::nullopt);

struct RegressionFit {
  DesignSpec spec;
  std::vector<std::string> names;
  Eigen::VectorXd coeffs;
  Eigen::VectorXd coeff_ses;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd xtx_inv;  ///< (X'X)^(-1), for prediction variances
  double rss = 0.0;
  double sigma2 = 0.0;  ///< RSS/(n-k)
  double aic = 0.0;     ///< n ln(RSS/n) + 2(k+1); -inf on a perfect fit
  long n = 0;
  int k = 0;
  double lat_center = 0.0;
  double lon_center = 0.0;
};

/// Least squares via column-pivoted QR. Throws on rank deficiency or n <= k.
RegressionFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// build_design + fit_ols, keeping the design metadata for prediction.
RegressionFit fit_model(std::span<const PairedRecord> records, const DesignSpec& spec,
                        std::optional<std::pair<double, double>> centers = std::nullopt);

/// n ln(RSS/n) + 2(k+1), the noise variance counted as a parameter.
/// Throws on RSS = 0 (AIC undefined for a perfect fit).
double aic(const RegressionFit& fit);

struct ModelSelection {
  struct Row {
    DesignSpec spec;
    double aic_value = 0.0;
    bool ok = false;
    std::string error;
  };
  RegressionFit best;
  std::vector<Row> table;
};

/// Fits every candidate and returns the minimum-AIC fit with the full table.
ModelSelection select_model(std::span<const PairedRecord> records,
                            std::span<const DesignSpec> candidates);

/// Degrees 0..4 with grid + elevation.
std::vector<DesignSpec> default_candidates();

struct PointPrediction {
  double level = 0.0;  ///< exp of the fitted log level
  double se = 0.0;     ///< delta-method SE of the level
  double log_mean = 0.0;
  double log_var = 0.0;  ///< prediction variance on the log scale (includes sigma2)
};

PointPrediction predict_point_return(const RegressionFit& fit, double x_grid, double elev,
                                     double lat, double lon);

}  // namespace rainscale
