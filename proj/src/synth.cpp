#include "rainscale/synth.hpp"

#include "rainscale/preprocess.hpp"
#include "rainscale/rng.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace rainscale {

namespace {

// GPD excess over the threshold by inverse transform: survival
// (1 + xi e / sigma)^(-1/xi) = U.
double gpd_excess(Rng& rng, double sigma_u, double xi) {
  const double u = rng.uniform();
  if (std::abs(xi) < kXiEps) return -sigma_u * std::log(u);
  return sigma_u * std::expm1(-xi * std::log(u)) / xi;
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

}  // namespace

double pp_exceedance_rate(const GevParams& p, double threshold) {
  if (!p.valid() || !std::isfinite(threshold)) {
    throw std::invalid_argument("pp_exceedance_rate: invalid parameters");
  }
  const double z = (threshold - p.mu) / p.psi;
  if (std::abs(p.xi) < kXiEps) return std::exp(-z);
  const double t = 1.0 + p.xi * z;
  if (t <= 0.0) {
    throw std::invalid_argument("pp_exceedance_rate: threshold outside the support");
  }
  return std::pow(t, -1.0 / p.xi);
}

double pp_threshold_for_rate(const GevParams& p, double rate_per_year) {
  if (!p.valid() || !(rate_per_year > 0.0) || !std::isfinite(rate_per_year)) {
    throw std::invalid_argument("pp_threshold_for_rate: rate must be positive and finite");
  }
  const double loglam = std::log(rate_per_year);
  if (std::abs(p.xi) < kXiEps) return p.mu - p.psi * loglam;
  return p.mu + p.psi * std::expm1(-p.xi * loglam) / p.xi;
}

double threshold_for_quantile(const GevParams& p, double quantile, Season season) {
  if (!(quantile > 0.0 && quantile < 1.0)) {
    throw std::invalid_argument("threshold_for_quantile: quantile must be in (0, 1)");
  }
  const double rate = (1.0 - quantile) * season_length_days(season);
  return pp_threshold_for_rate(p, rate);
}

std::vector<double> simulate_pp_exceedances(const GevParams& truth, double threshold,
                                            double years, std::uint64_t seed) {
  if (!(years > 0.0)) {
    throw std::invalid_argument("simulate_pp_exceedances: years must be > 0");
  }
  const double rate = pp_exceedance_rate(truth, threshold);
  const double mean_count = rate * years;
  if (!(mean_count > 0.0) || !std::isfinite(mean_count)) {
    throw std::invalid_argument("simulate_pp_exceedances: degenerate configuration");
  }
  const double sigma_u = truth.psi + truth.xi * (threshold - truth.mu);

  Rng rng(seed);
  const long n = rng.poisson(mean_count);
  std::vector<double> peaks;
  peaks.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    peaks.push_back(threshold + gpd_excess(rng, sigma_u, truth.xi));
  }
  return peaks;
}

DailySeries simulate_daily_series(const SynthConfig& cfg) {
  if (!cfg.truth.valid()) throw std::invalid_argument("simulate_daily_series: invalid truth");
  if (cfg.n_years <= 0) throw std::invalid_argument("simulate_daily_series: n_years must be > 0");
  if (!(cfg.missing_rate >= 0.0 && cfg.missing_rate < 1.0) ||
      !(cfg.dry_probability >= 0.0 && cfg.dry_probability <= 1.0)) {
    throw std::invalid_argument("simulate_daily_series: rates out of range");
  }

  const double u = threshold_for_quantile(cfg.truth, cfg.threshold_quantile, cfg.season);
  const double p_exceed = 1.0 - cfg.threshold_quantile;
  const double sigma_u = cfg.truth.psi + cfg.truth.xi * (u - cfg.truth.mu);

  Rng rng(cfg.seed);
  DailySeries s;
  s.site_id = "synth";
  for (int sy = cfg.first_year; sy < cfg.first_year + cfg.n_years; ++sy) {
    Date begin, end;
    switch (cfg.season) {
      case Season::DJF: begin = make_date(sy - 1, 12, 1); end = make_date(sy, 3, 1); break;
      case Season::MAM: begin = make_date(sy, 3, 1); end = make_date(sy, 6, 1); break;
      case Season::JJA: begin = make_date(sy, 6, 1); end = make_date(sy, 9, 1); break;
      case Season::SON: begin = make_date(sy, 9, 1); end = make_date(sy, 12, 1); break;
    }
    for (Date d = begin; d < end; d += std::chrono::days{1}) {
      if (rng.uniform() < cfg.missing_rate) {
        s.records.push_back({d, std::nullopt});
        continue;
      }
      double v;
      if (rng.uniform() < p_exceed) {
        v = u + gpd_excess(rng, sigma_u, cfg.truth.xi);
      } else if (rng.uniform() < cfg.dry_probability) {
        v = 0.0;
      } else {
        // Bounded wet-day body strictly below the threshold, skewed to 0.
        const double w = rng.uniform();
        v = std::max(0.0, u) * w * w;
      }
      s.records.push_back({d, round1(v)});
    }
  }
  return s;
}

Dataset simulate_dataset(const DatasetConfig& cfg) {
  if (cfg.n_stations <= 0 || cfg.grid_nlat <= 0 || cfg.grid_nlon <= 0) {
    throw std::invalid_argument("simulate_dataset: counts must be positive");
  }
  Dataset out;

  const double lat_span = cfg.spacing * cfg.grid_nlat;
  const double lon_span = cfg.spacing * cfg.grid_nlon;
  const double lat_min = cfg.lat0 - cfg.spacing / 2.0;
  const double lon_min = cfg.lon0 - cfg.spacing / 2.0;
  const double lat_mid = lat_min + lat_span / 2.0;
  const double lon_mid = lon_min + lon_span / 2.0;

  // Smooth multiplicative surface for (mu, psi); return values scale with it.
  auto surface = [&](double lat, double lon) {
    const double x = (lat - lat_mid) / std::max(lat_span, 1e-9);
    const double y = (lon - lon_mid) / std::max(lon_span, 1e-9);
    return std::exp(0.30 * x - 0.20 * y + 0.15 * x * y);
  };

  for (int i = 0; i < cfg.grid_nlat; ++i) {
    for (int j = 0; j < cfg.grid_nlon; ++j) {
      const double lat = cfg.lat0 + i * cfg.spacing;
      const double lon = cfg.lon0 + j * cfg.spacing;
      SynthConfig c = cfg.base;
      const double g = surface(lat, lon);
      c.truth.mu *= g;
      c.truth.psi *= g;
      c.missing_rate = 0.0;  // reanalysis-style cells are complete
      c.seed = mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(i * cfg.grid_nlon + j));
      DailySeries cell = simulate_daily_series(c);
      char id[32];
      std::snprintf(id, sizeof(id), "cell_%02d_%02d", i, j);
      cell.site_id = id;
      cell.lat = lat;
      cell.lon = lon;
      cell.elev = std::nullopt;
      out.cells.push_back(std::move(cell));
    }
  }

  Rng meta_rng(mix_seed(cfg.seed, 7));
  for (int k = 0; k < cfg.n_stations; ++k) {
    const double lat = std::round(meta_rng.uniform(lat_min, lat_min + lat_span) * 1e4) / 1e4;
    const double lon = std::round(meta_rng.uniform(lon_min, lon_min + lon_span) * 1e4) / 1e4;
    const double elev = std::round(meta_rng.uniform(100.0, 2500.0));
    // Point returns sit above the aggregated cell returns, with a negative
    // elevation effect and site-to-site noise.
    const double amp = std::exp(0.45 - 2.0e-4 * (elev - 1000.0) + 0.10 * meta_rng.normal());

    SynthConfig c = cfg.base;
    const double g = surface(lat, lon) * amp;
    c.truth.mu *= g;
    c.truth.psi *= g;
    c.seed = mix_seed(cfg.seed, 3000 + static_cast<std::uint64_t>(k));
    DailySeries st = simulate_daily_series(c);
    char id[32];
    std::snprintf(id, sizeof(id), "st%03d", k);
    st.site_id = id;
    st.lat = lat;
    st.lon = lon;
    st.elev = elev;
    out.stations.push_back(std::move(st));
  }
  return out;
}

}  // namespace rainscale
