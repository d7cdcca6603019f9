#pragma once

#include <Eigen/Core>

#include <array>
#include <span>

namespace rainscale {

// Below this |xi| every formula switches to its Gumbel-limit form to avoid
// catastrophic cancellation in the (n^xi - 1)/xi family of expressions.
inline constexpr double kXiEps = 1e-6;

/// GEV parameter triple. Levels are carried in tenths of a millimeter.
struct GevParams {
  double mu = 0.0;   ///< location
  double psi = 1.0;  ///< scale, must be > 0
  double xi = 0.0;   ///< shape

  [[nodiscard]] bool valid() const;
};

/// n-year return value with its delta-method standard error.
struct ReturnLevel {
  double value = 0.0;
  double se = 0.0;
  double years = 0.0;
};

/// Symmetric 3x3 covariance of (mu, psi, xi) estimates.
using CovMatrix3 = Eigen::Matrix3d;

/// P(Y <= y) for the GEV family; 0 below a finite lower endpoint (xi > 0),
/// 1 above a finite upper endpoint (xi < 0).
double gev_cdf(const GevParams& p, double y);

/// Level exceeded on average once per `years` (defined through exp(-1/n)).
double return_level(const GevParams& p, double years);

/// Gradient of return_level with respect to (mu, psi, xi).
std::array<double, 3> return_level_gradient(const GevParams& p, double years);

/// Intensity of the threshold-exceedance Poisson process at level y.
double pp_intensity(const GevParams& p, double y);

/// Negative log-likelihood of the point-process exceedance model over an
/// observed period of `years_observed` season-years. Returns +inf when a
/// support constraint is violated (that is how the optimizer sees the
/// boundary, not an error).
double pp_neg_log_likelihood(const GevParams& p, std::span<const double> peaks,
                             double threshold, double years_observed);

/// sqrt(grad' * cov * grad), clamping float-noise negatives to zero.
double delta_method_se(const std::array<double, 3>& grad, const CovMatrix3& cov);

}  // namespace rainscale
