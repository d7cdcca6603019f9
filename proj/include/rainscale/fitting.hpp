#pragma once

#include "rainscale/evd.hpp"
#include "rainscale/preprocess.hpp"

#include <optional>
#include <span>
#include <vector>

namespace rainscale {

/// Maximum-likelihood fit of the point-process exceedance model.
/// A non-converged fit is data, not an error: the pipeline records and
/// excludes it.
struct FitResult {
  GevParams params;
  CovMatrix3 cov = CovMatrix3::Zero();
  bool converged = false;
  int n_peaks = 0;
  double threshold = 0.0;
  double t_years = 0.0;
  double neg_loglik = 0.0;
};

/// Gumbel-moment seed: psi0 = mean excess, mu0 = u + psi0 ln(N/T), xi0 = 0.05.
/// Requires at least 10 peaks.
GevParams initial_params(std::span<const double> peaks, double threshold, double t_years);

/// Minimizes the negative log-likelihood over (mu, log psi, xi) with a
/// Nelder-Mead simplex restarted once from the incumbent. The covariance is
/// the inverse of the central-difference Hessian (observed information) in
/// the original (mu, psi, xi) coordinates; an indefinite or singular Hessian,
/// a shape estimate at the [-0.95, 2] box, or an exhausted evaluation budget
/// all mark the fit non-converged.
FitResult fit_point_process(std::span<const double> peaks, double threshold, double t_years);

FitResult fit_point_process(const SeasonalExceedances& ex);

/// Return level and delta-method SE from a converged fit.
ReturnLevel return_level_with_se(const FitResult& fit, double years);

enum class TestSide { Right, Left };

struct XiTest {
  double z = 0.0;
  double critical = 0.0;
  bool reject = false;
};

/// One-sided z-test of xi = 0 using the delta-method SE of the shape.
XiTest xi_test(const FitResult& fit, TestSide side, double alpha = 0.05);

/// One row of the threshold-sensitivity comparison. Failed fits appear as
/// rows with an exclusion reason, never as exceptions.
struct StabilityRow {
  double percentile = 0.0;
  std::string exclusion;  ///< empty when the fit is usable
  std::optional<FitResult> fit;
  std::optional<ReturnLevel> level;
};

struct StabilityTable {
  std::vector<StabilityRow> rows;
};

/// Fits the same series at several percentile thresholds so parameter and
/// return-level shifts can be inspected. Defaults to the 95th and 97th.
StabilityTable threshold_stability(const DailySeries& s, const PreprocessOptions& base,
                                   std::span<const double> percentiles,
                                   double years = 100.0);
StabilityTable threshold_stability(const DailySeries& s, const PreprocessOptions& base,
                                   double years = 100.0);

}  // namespace rainscale
