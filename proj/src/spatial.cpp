#include "rainscale/spatial.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rainscale {

namespace {

constexpr double kEarthRadiusMiles = 3958.8;
constexpr double kDegToRad = 0.017453292519943295;

int trend_columns(KrigingTrend t) {
  switch (t) {
    case KrigingTrend::Constant: return 1;
    case KrigingTrend::LatLon: return 3;
    case KrigingTrend::LatLonElev: return 4;
  }
  return 1;
}

Eigen::RowVectorXd trend_row(KrigingTrend t, double lat, double lon, double elev) {
  Eigen::RowVectorXd row(trend_columns(t));
  row[0] = 1.0;
  if (t != KrigingTrend::Constant) {
    row[1] = lat;
    row[2] = lon;
    if (t == KrigingTrend::LatLonElev) row[3] = elev;
  }
  return row;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (sorted.size() == 1) return sorted.front();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

double great_circle_miles(double lat1, double lon1, double lat2, double lon2) {
  const double phi1 = lat1 * kDegToRad;
  const double phi2 = lat2 * kDegToRad;
  const double dphi = (lat2 - lat1) * kDegToRad;
  const double dlam = (lon2 - lon1) * kDegToRad;
  const double sp = std::sin(dphi / 2.0);
  const double sl = std::sin(dlam / 2.0);
  const double a = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  return 2.0 * kEarthRadiusMiles * std::asin(std::sqrt(std::min(1.0, a)));
}

Variogram empirical_variogram(std::span<const double> residuals,
                              std::span<const SiteLocation> locations,
                              double max_lag_miles, int n_bins) {
  if (residuals.size() != locations.size()) {
    throw std::invalid_argument("empirical_variogram: residuals/locations size mismatch");
  }
  if (residuals.size() < 2) {
    throw std::invalid_argument("empirical_variogram: need at least 2 points");
  }
  if (!(max_lag_miles > 0.0) || n_bins < 1) {
    throw std::invalid_argument("empirical_variogram: bad binning parameters");
  }

  Variogram v;
  v.max_lag_miles = max_lag_miles;
  const double width = max_lag_miles / n_bins;
  v.bins.resize(static_cast<std::size_t>(n_bins));
  std::vector<double> sq_sum(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<double> dist_sum(static_cast<std::size_t>(n_bins), 0.0);
  for (int b = 0; b < n_bins; ++b) {
    v.bins[static_cast<std::size_t>(b)].lag_lo = b * width;
    v.bins[static_cast<std::size_t>(b)].lag_hi = (b + 1) * width;
  }

  for (std::size_t i = 0; i < locations.size(); ++i) {
    for (std::size_t j = i + 1; j < locations.size(); ++j) {
      const double h = great_circle_miles(locations[i].lat, locations[i].lon,
                                          locations[j].lat, locations[j].lon);
      if (h > max_lag_miles) continue;
      auto b = static_cast<std::size_t>(h / width);
      if (b >= static_cast<std::size_t>(n_bins)) b = static_cast<std::size_t>(n_bins) - 1;
      const double d = residuals[i] - residuals[j];
      sq_sum[b] += d * d;
      dist_sum[b] += h;
      ++v.bins[b].pairs;
    }
  }

  for (std::size_t b = 0; b < v.bins.size(); ++b) {
    auto& bin = v.bins[b];
    if (bin.pairs > 0) {
      bin.semivariance = sq_sum[b] / (2.0 * static_cast<double>(bin.pairs));
      bin.mean_distance = dist_sum[b] / static_cast<double>(bin.pairs);
    } else {
      bin.semivariance = 0.0;
      bin.mean_distance = (bin.lag_lo + bin.lag_hi) / 2.0;
    }
  }
  return v;
}

std::vector<KrigingPrediction> universal_krige(std::span<const KrigingObservation> obs,
                                               std::span<const KrigingTarget> targets,
                                               const KrigingModel& model) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  if (n < 2) throw std::invalid_argument("universal_krige: need at least 2 observations");
  if (!(model.sigma2 > 0.0) || !(model.range_miles > 0.0) || !(model.nugget >= 0.0)) {
    throw std::invalid_argument("universal_krige: need sigma2 > 0, range > 0, nugget >= 0");
  }

  auto cov = [&](double h) { return model.sigma2 * std::exp(-h / model.range_miles); };
  const double c0_total = model.sigma2 + model.nugget;

  // Duplicate sites make the covariance singular; report them explicitly.
  {
    std::ostringstream dups;
    int n_dups = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (great_circle_miles(obs[i].lat, obs[i].lon, obs[j].lat, obs[j].lon) < 1e-9) {
          if (n_dups++ < 8) dups << " (" << i << "," << j << ")";
        }
      }
    }
    if (n_dups > 0) {
      throw std::invalid_argument("universal_krige: duplicate observation sites at indices" +
                                  dups.str());
    }
  }

  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i, i) = c0_total;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double h = great_circle_miles(obs[i].lat, obs[i].lon, obs[j].lat, obs[j].lon);
      c(i, j) = c(j, i) = cov(h);
    }
  }

  const int p = trend_columns(model.trend);
  Eigen::MatrixXd f(n, p);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    f.row(i) = trend_row(model.trend, obs[i].lat, obs[i].lon, obs[i].elev);
    z[i] = obs[i].value;
  }

  Eigen::LDLT<Eigen::MatrixXd> c_fact(c);
  if (c_fact.info() != Eigen::Success || !c_fact.isPositive()) {
    throw std::runtime_error("universal_krige: covariance matrix is not positive definite");
  }

  const Eigen::MatrixXd c_inv_f = c_fact.solve(f);
  const Eigen::MatrixXd g = f.transpose() * c_inv_f;  // F' C^-1 F
  Eigen::LDLT<Eigen::MatrixXd> g_fact(g);
  if (g_fact.info() != Eigen::Success) {
    throw std::runtime_error("universal_krige: singular trend system");
  }
  const Eigen::VectorXd beta = g_fact.solve(f.transpose() * c_fact.solve(z));
  const Eigen::VectorXd resid_weights = c_fact.solve(z - f * beta);

  std::vector<KrigingPrediction> out;
  out.reserve(targets.size());
  Eigen::VectorXd c_t(n);
  for (const auto& t : targets) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = great_circle_miles(t.lat, t.lon, obs[i].lat, obs[i].lon);
      c_t[i] = cov(h) + (h < 1e-9 ? model.nugget : 0.0);
    }
    const Eigen::RowVectorXd f_t = trend_row(model.trend, t.lat, t.lon, t.elev);

    KrigingPrediction pred;
    pred.value = f_t.dot(beta) + c_t.dot(resid_weights);

    const Eigen::VectorXd c_inv_ct = c_fact.solve(c_t);
    const Eigen::VectorXd u = f_t.transpose() - c_inv_f.transpose() * c_t;
    const double var = c0_total - c_t.dot(c_inv_ct) + u.dot(g_fact.solve(u));
    pred.se = std::sqrt(std::max(var, 0.0));
    out.push_back(pred);
  }
  return out;
}

PredictionComparison compare_predictions(std::span<const double> kriged,
                                         std::span<const double> modeled) {
  if (kriged.size() != modeled.size()) {
    throw std::invalid_argument("compare_predictions: size mismatch");
  }
  PredictionComparison out;
  out.ratios.resize(kriged.size(), std::numeric_limits<double>::quiet_NaN());
  out.excluded.resize(kriged.size(), false);
  std::vector<double> used;
  for (std::size_t i = 0; i < kriged.size(); ++i) {
    if (!(modeled[i] > 0.0) || !std::isfinite(modeled[i]) || !std::isfinite(kriged[i])) {
      out.excluded[i] = true;
      continue;
    }
    out.ratios[i] = kriged[i] / modeled[i];
    used.push_back(out.ratios[i]);
  }
  out.n_used = used.size();
  std::sort(used.begin(), used.end());
  out.q05 = quantile_sorted(used, 0.05);
  out.q50 = quantile_sorted(used, 0.50);
  out.q95 = quantile_sorted(used, 0.95);
  return out;
}

}  // namespace rainscale
