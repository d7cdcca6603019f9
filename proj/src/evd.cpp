#include "rainscale/evd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rainscale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_params(const GevParams& p) {
  if (!p.valid()) {
    throw std::invalid_argument(
        "GevParams invalid: require finite (mu, psi, xi) with psi > 0");
  }
}

}  // namespace

bool GevParams::valid() const {
  return std::isfinite(mu) && std::isfinite(psi) && std::isfinite(xi) && psi > 0.0;
}

double gev_cdf(const GevParams& p, double y) {
  check_params(p);
  if (!std::isfinite(y)) throw std::domain_error("gev_cdf: y must be finite");
  const double z = (y - p.mu) / p.psi;
  if (std::abs(p.xi) < kXiEps) {
    return std::exp(-std::exp(-z));
  }
  const double t = 1.0 + p.xi * z;
  if (t <= 0.0) {
    // Outside the support: below the lower endpoint for xi > 0, above the
    // upper endpoint for xi < 0.
    return p.xi > 0.0 ? 0.0 : 1.0;
  }
  return std::exp(-std::pow(t, -1.0 / p.xi));
}

double return_level(const GevParams& p, double years) {
  check_params(p);
  if (!(years >= 2.0)) {
    throw std::invalid_argument("return_level: return period must be >= 2 years");
  }
  const double logn = std::log(years);
  if (std::abs(p.xi) < kXiEps) {
    return p.mu + p.psi * logn;
  }
  // (n^xi - 1)/xi via expm1 keeps the small-|xi| branch smooth.
  return p.mu + p.psi * std::expm1(p.xi * logn) / p.xi;
}

std::array<double, 3> return_level_gradient(const GevParams& p, double years) {
  check_params(p);
  if (!(years >= 2.0)) {
    throw std::invalid_argument("return_level_gradient: return period must be >= 2 years");
  }
  const double logn = std::log(years);
  if (std::abs(p.xi) < kXiEps) {
    return {1.0, logn, p.psi * logn * logn / 2.0};
  }
  const double xi = p.xi;
  const double s = xi * logn;
  const double dpsi = std::expm1(s) / xi;
  double dxi;
  if (std::abs(s) < 1e-2) {
    // Series for (s e^s - e^s + 1)/xi^2; the closed form cancels badly here.
    const double l2 = logn * logn;
    dxi = p.psi * l2 *
          (0.5 + s * (1.0 / 3.0 + s * (0.125 + s * (1.0 / 30.0 + s / 144.0))));
  } else {
    const double es = std::exp(s);
    dxi = p.psi * (s * es - es + 1.0) / (xi * xi);
  }
  return {1.0, dpsi, dxi};
}

double pp_intensity(const GevParams& p, double y) {
  check_params(p);
  if (!std::isfinite(y)) throw std::domain_error("pp_intensity: y must be finite");
  const double z = (y - p.mu) / p.psi;
  if (std::abs(p.xi) < kXiEps) {
    return std::exp(-z) / p.psi;
  }
  const double t = 1.0 + p.xi * z;
  if (t <= 0.0) return 0.0;
  return std::pow(t, -1.0 / p.xi - 1.0) / p.psi;
}

double pp_neg_log_likelihood(const GevParams& p, std::span<const double> peaks,
                             double threshold, double years_observed) {
  check_params(p);
  if (!std::isfinite(threshold)) {
    throw std::invalid_argument("pp_neg_log_likelihood: threshold must be finite");
  }
  if (!(years_observed > 0.0)) {
    throw std::invalid_argument("pp_neg_log_likelihood: observed period must be > 0");
  }
  for (double y : peaks) {
    if (!(y > threshold)) {
      throw std::invalid_argument("pp_neg_log_likelihood: every peak must exceed the threshold");
    }
  }

  const double n = static_cast<double>(peaks.size());
  const double log_psi = std::log(p.psi);

  if (std::abs(p.xi) < kXiEps) {
    double sum = 0.0;
    for (double y : peaks) sum += (y - p.mu) / p.psi;
    return n * log_psi + sum + years_observed * std::exp(-(threshold - p.mu) / p.psi);
  }

  const double tu = 1.0 + p.xi * (threshold - p.mu) / p.psi;
  if (tu <= 0.0) return kInf;
  double sum_log = 0.0;
  for (double y : peaks) {
    const double t = 1.0 + p.xi * (y - p.mu) / p.psi;
    if (t <= 0.0) return kInf;
    sum_log += std::log(t);
  }
  return n * log_psi + (1.0 / p.xi + 1.0) * sum_log +
         years_observed * std::pow(tu, -1.0 / p.xi);
}

double delta_method_se(const std::array<double, 3>& grad, const CovMatrix3& cov) {
  const double scale = cov.cwiseAbs().maxCoeff();
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, scale)) {
    throw std::invalid_argument("delta_method_se: covariance must be symmetric");
  }
  const Eigen::Vector3d g(grad[0], grad[1], grad[2]);
  const double q = g.dot(cov * g);
  if (q < -1e-12) {
    throw std::invalid_argument("delta_method_se: covariance gives a negative variance");
  }
  return std::sqrt(std::max(q, 0.0));
}

}  // namespace rainscale
