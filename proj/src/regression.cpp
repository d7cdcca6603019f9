#include "rainscale/regression.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rainscale {

namespace {

std::string monomial_name(int a, int b) {
  auto piece = [](const char* base, int e) -> std::string {
    if (e == 0) return "";
    if (e == 1) return base;
    return std::string(base) + "^" + std::to_string(e);
  };
  const std::string la = piece("lat", a);
  const std::string lo = piece("lon", b);
  if (la.empty()) return lo;
  if (lo.empty()) return la;
  return la + "*" + lo;
}

// Design row shared by build_design and predict_point_return.
Eigen::RowVectorXd design_row(const DesignSpec& spec, int k, double x_grid, double elev,
                              double dlat, double dlon) {
  Eigen::RowVectorXd row(k);
  int c = 0;
  row[c++] = 1.0;
  if (spec.include_grid) row[c++] = x_grid;
  if (spec.include_elev) row[c++] = elev;
  for (int d = 1; d <= spec.latlon_degree; ++d) {
    for (int a = d; a >= 0; --a) {
      row[c++] = std::pow(dlat, a) * std::pow(dlon, d - a);
    }
  }
  return row;
}

int design_columns(const DesignSpec& spec) {
  int k = 1 + (spec.include_grid ? 1 : 0) + (spec.include_elev ? 1 : 0);
  for (int d = 1; d <= spec.latlon_degree; ++d) k += d + 1;
  return k;
}

}  // namespace

std::size_t assign_station_to_cell(double lat, double lon, std::span<const GridCell> cells,
                                   double half_spacing) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (std::abs(lat - cells[i].lat) <= half_spacing &&
        std::abs(lon - cells[i].lon) <= half_spacing) {
      return i;
    }
  }
  throw std::domain_error("assign_station_to_cell: station outside the grid");
}

Design build_design(std::span<const PairedRecord> records, const DesignSpec& spec,
                    std::optional<std::pair<double, double>> centers) {
  if (records.empty()) throw std::invalid_argument("build_design: no records");
  if (spec.latlon_degree < 0 || spec.latlon_degree > 4) {
    throw std::invalid_argument("build_design: degree must be in 0..4");
  }

  Design d;
  d.spec = spec;
  if (centers) {
    d.lat_center = centers->first;
    d.lon_center = centers->second;
  } else {
    double lat_sum = 0.0, lon_sum = 0.0;
    for (const auto& r : records) {
      lat_sum += r.lat;
      lon_sum += r.lon;
    }
    d.lat_center = lat_sum / static_cast<double>(records.size());
    d.lon_center = lon_sum / static_cast<double>(records.size());
  }

  d.names.push_back("intercept");
  if (spec.include_grid) d.names.push_back("grid_return");
  if (spec.include_elev) d.names.push_back("elevation");
  for (int deg = 1; deg <= spec.latlon_degree; ++deg) {
    for (int a = deg; a >= 0; --a) d.names.push_back(monomial_name(a, deg - a));
  }

  const auto n = static_cast<Eigen::Index>(records.size());
  const int k = design_columns(spec);
  d.X.resize(n, k);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    if (!(r.y_point > 0.0)) {
      throw std::invalid_argument("build_design: point return must be > 0 (log response)");
    }
    d.y[i] = std::log(r.y_point);
    d.X.row(i) = design_row(spec, k, r.x_grid, r.elev, r.lat - d.lat_center,
                            r.lon - d.lon_center);
  }
  return d;
}

RegressionFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  if (y.size() != n) throw std::invalid_argument("fit_ols: X and y sizes differ");
  if (n <= k) throw std::invalid_argument("fit_ols: need more rows than columns");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < k) throw std::invalid_argument("fit_ols: design matrix is rank deficient");

  RegressionFit fit;
  fit.coeffs = qr.solve(y);
  fit.residuals = y - X * fit.coeffs;
  fit.rss = fit.residuals.squaredNorm();
  fit.n = n;
  fit.k = static_cast<int>(k);
  fit.sigma2 = fit.rss / static_cast<double>(n - k);

  // (X'X)^(-1) = P R^(-1) R^(-T) P' from the pivoted QR.
  const Eigen::MatrixXd r =
      qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd unpivoted = r_inv * r_inv.transpose();
  const auto perm = qr.colsPermutation();
  fit.xtx_inv = perm * unpivoted * perm.transpose();

  fit.coeff_ses = (fit.sigma2 * fit.xtx_inv.diagonal().array()).cwiseMax(0.0).sqrt();
  fit.aic = (fit.rss > 0.0)
                ? static_cast<double>(n) * std::log(fit.rss / static_cast<double>(n)) +
                      2.0 * (static_cast<double>(k) + 1.0)
                : -std::numeric_limits<double>::infinity();
  return fit;
}

RegressionFit fit_model(std::span<const PairedRecord> records, const DesignSpec& spec,
                        std::optional<std::pair<double, double>> centers) {
  const Design d = build_design(records, spec, centers);
  RegressionFit fit = fit_ols(d.X, d.y);
  fit.spec = d.spec;
  fit.names = d.names;
  fit.lat_center = d.lat_center;
  fit.lon_center = d.lon_center;
  return fit;
}

double aic(const RegressionFit& fit) {
  if (!(fit.rss > 0.0)) {
    throw std::invalid_argument("aic: undefined for a perfect fit (RSS = 0)");
  }
  return static_cast<double>(fit.n) * std::log(fit.rss / static_cast<double>(fit.n)) +
         2.0 * (static_cast<double>(fit.k) + 1.0);
}

ModelSelection select_model(std::span<const PairedRecord> records,
                            std::span<const DesignSpec> candidates) {
  if (candidates.empty()) throw std::invalid_argument("select_model: no candidates");

  ModelSelection sel;
  bool have_best = false;
  double best_aic = std::numeric_limits<double>::infinity();
  for (const DesignSpec& spec : candidates) {
    ModelSelection::Row row;
    row.spec = spec;
    try {
      RegressionFit fit = fit_model(records, spec);
      row.aic_value = fit.aic;
      row.ok = true;
      if (!have_best || fit.aic < best_aic) {
        best_aic = fit.aic;
        sel.best = std::move(fit);
        have_best = true;
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    sel.table.push_back(std::move(row));
  }
  if (!have_best) throw std::runtime_error("select_model: every candidate failed to fit");
  return sel;
}

std::vector<DesignSpec> default_candidates() {
  std::vector<DesignSpec> out;
  for (int deg = 0; deg <= 4; ++deg) out.push_back({true, true, deg});
  return out;
}

PointPrediction predict_point_return(const RegressionFit& fit, double x_grid, double elev,
                                     double lat, double lon) {
  if (fit.coeffs.size() == 0) throw std::invalid_argument("predict_point_return: empty fit");
  if (!std::isfinite(x_grid) || !std::isfinite(elev) || !std::isfinite(lat) ||
      !std::isfinite(lon)) {
    throw std::invalid_argument("predict_point_return: covariates must be finite");
  }
  const Eigen::RowVectorXd row =
      design_row(fit.spec, static_cast<int>(fit.coeffs.size()), x_grid, elev,
                 lat - fit.lat_center, lon - fit.lon_center);

  PointPrediction out;
  out.log_mean = row.dot(fit.coeffs);
  out.log_var = fit.sigma2;
  if (fit.xtx_inv.size() > 0) {
    out.log_var = fit.sigma2 * (1.0 + (row * fit.xtx_inv * row.transpose())(0, 0));
  }
  out.level = std::exp(out.log_mean);
  out.se = out.level * std::sqrt(std::max(out.log_var, 0.0));
  return out;
}

}  // namespace rainscale
