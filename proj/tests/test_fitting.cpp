#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rainscale/fitting.hpp"
#include "rainscale/rng.hpp"
#include "rainscale/synth.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace rainscale;

namespace {

// Independent GPD/Poisson route for the equivalence check: a small 2-d
// Nelder-Mead over (log sigma, xi) written here so it shares nothing with the
// library optimizer.
double gpd_nll(double sigma, double xi, const std::vector<double>& excesses) {
  if (!(sigma > 0.0)) return INFINITY;
  double nll = excesses.size() * std::log(sigma);
  if (std::abs(xi) < 1e-8) {
    for (double e : excesses) nll += e / sigma;
    return nll;
  }
  for (double e : excesses) {
    const double t = 1.0 + xi * e / sigma;
    if (t <= 0.0) return INFINITY;
    nll += (1.0 / xi + 1.0) * std::log(t);
  }
  return nll;
}

std::pair<double, double> fit_gpd_oracle(const std::vector<double>& excesses) {
  double mean = 0.0;
  for (double e : excesses) mean += e;
  mean /= excesses.size();

  auto obj = [&](const Eigen::Vector2d& v) { return gpd_nll(std::exp(v[0]), v[1], excesses); };

  Eigen::Vector2d simplex[3] = {{std::log(mean), 0.05},
                                {std::log(mean) + 0.1, 0.05},
                                {std::log(mean), 0.15}};
  double f[3] = {obj(simplex[0]), obj(simplex[1]), obj(simplex[2])};
  for (int pass = 0; pass < 2; ++pass) {
    for (int it = 0; it < 4000; ++it) {
      int order[3] = {0, 1, 2};
      std::sort(order, order + 3, [&](int a, int b) { return f[a] < f[b]; });
      const Eigen::Vector2d best = simplex[order[0]], mid = simplex[order[1]],
                            worst = simplex[order[2]];
      const double fb = f[order[0]], fm = f[order[1]], fw = f[order[2]];
      if (std::isfinite(fb) && fw - fb <= 1e-12 * (std::abs(fb) + 1e-12)) break;
      const Eigen::Vector2d centroid = (best + mid) / 2.0;
      const Eigen::Vector2d refl = centroid + (centroid - worst);
      const double fr = obj(refl);
      Eigen::Vector2d take = refl;
      double ft = fr;
      if (fr < fb) {
        const Eigen::Vector2d exp_pt = centroid + 2.0 * (centroid - worst);
        const double fe = obj(exp_pt);
        if (fe < fr) {
          take = exp_pt;
          ft = fe;
        }
      } else if (fr >= fm) {
        const Eigen::Vector2d con = centroid + 0.5 * (worst - centroid);
        const double fc = obj(con);
        if (fc < fw) {
          take = con;
          ft = fc;
        } else {
          simplex[order[1]] = best + 0.5 * (mid - best);
          f[order[1]] = obj(simplex[order[1]]);
          simplex[order[2]] = best + 0.5 * (worst - best);
          f[order[2]] = obj(simplex[order[2]]);
          continue;
        }
      }
      simplex[order[2]] = take;
      f[order[2]] = ft;
    }
    // restart around the incumbent
    int ibest = 0;
    for (int i = 1; i < 3; ++i)
      if (f[i] < f[ibest]) ibest = i;
    const Eigen::Vector2d b = simplex[ibest];
    simplex[0] = b;
    simplex[1] = b + Eigen::Vector2d(1e-3, 0);
    simplex[2] = b + Eigen::Vector2d(0, 1e-3);
    f[0] = obj(simplex[0]);
    f[1] = obj(simplex[1]);
    f[2] = obj(simplex[2]);
  }
  int ibest = 0;
  for (int i = 1; i < 3; ++i)
    if (f[i] < f[ibest]) ibest = i;
  return {std::exp(simplex[ibest][0]), simplex[ibest][1]};
}

}  // namespace

TEST_CASE("initial_params closed form") {
  std::vector<double> peaks(250);
  // mean excess exactly 100 over u = 300
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    peaks[i] = 300.0 + (i < 125 ? 50.0 : 150.0);
  }
  const GevParams p = initial_params(peaks, 300.0, 50.0);
  CHECK(p.psi == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(p.mu == doctest::Approx(300.0 + 100.0 * std::log(5.0)).epsilon(1e-12));
  CHECK(p.xi == 0.05);

  std::vector<double> one_per_year(50, 310.0);
  CHECK(initial_params(one_per_year, 300.0, 50.0).mu == doctest::Approx(300.0));

  std::vector<double> five(5, 310.0);
  CHECK_THROWS_AS(initial_params(five, 300.0, 50.0), std::invalid_argument);
}

TEST_CASE("fit recovers simulated parameters and never worsens the seed") {
  const GevParams truth{500, 200, 0.1};
  const double u = threshold_for_quantile(truth, 0.95, Season::DJF);
  const auto peaks = simulate_pp_exceedances(truth, u, 50.0, 12345);
  REQUIRE(peaks.size() > 100);

  const FitResult fit = fit_point_process(peaks, u, 50.0);
  REQUIRE(fit.converged);
  CHECK(fit.params.psi > 0.0);

  const GevParams seed = initial_params(peaks, u, 50.0);
  const double seed_nll = pp_neg_log_likelihood(seed, peaks, u, 50.0);
  CHECK(fit.neg_loglik <= seed_nll);

  const double se_mu = std::sqrt(fit.cov(0, 0));
  const double se_psi = std::sqrt(fit.cov(1, 1));
  const double se_xi = std::sqrt(fit.cov(2, 2));
  CHECK(std::abs(fit.params.mu - truth.mu) < 4.0 * se_mu);
  CHECK(std::abs(fit.params.psi - truth.psi) < 4.0 * se_psi);
  CHECK(std::abs(fit.params.xi - truth.xi) < 4.0 * se_xi);
}

TEST_CASE("fits are deterministic and degenerate data fail cleanly") {
  const GevParams truth{500, 200, 0.1};
  const auto peaks = simulate_pp_exceedances(truth, 300.0, 50.0, 7);
  const FitResult a = fit_point_process(peaks, 300.0, 50.0);
  const FitResult b = fit_point_process(peaks, 300.0, 50.0);
  CHECK(a.params.mu == b.params.mu);
  CHECK(a.params.psi == b.params.psi);
  CHECK(a.params.xi == b.params.xi);
  CHECK(a.neg_loglik == b.neg_loglik);

  const std::vector<double> flat(40, 310.0);
  const FitResult bad = fit_point_process(flat, 300.0, 50.0);
  CHECK(!bad.converged);
}

TEST_CASE("gumbel data rarely reject xi = 0") {
  // The shape MLE carries a small negative finite-sample bias, so the
  // 2-SE calibration needs a few hundred peaks per fit to hold.
  const GevParams truth{500, 200, 0.0};
  int rejections = 0, converged = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto peaks = simulate_pp_exceedances(truth, 300.0, 200.0, mix_seed(555, rep));
    if (peaks.size() < 10) continue;
    const FitResult fit = fit_point_process(peaks, 300.0, 200.0);
    if (!fit.converged) continue;
    ++converged;
    if (std::abs(fit.params.xi) >= 2.0 * std::sqrt(fit.cov(2, 2))) ++rejections;
  }
  REQUIRE(converged >= 95);
  CHECK(static_cast<double>(converged - rejections) / converged >= 0.9);
}

TEST_CASE("point-process and GPD/Poisson factorization agree") {
  const GevParams truth{500, 200, 0.25};
  const double u = threshold_for_quantile(truth, 0.95, Season::DJF);
  const auto peaks = simulate_pp_exceedances(truth, u, 80.0, 2025);
  const FitResult pp = fit_point_process(peaks, u, 80.0);
  REQUIRE(pp.converged);

  std::vector<double> excesses;
  excesses.reserve(peaks.size());
  for (double y : peaks) excesses.push_back(y - u);
  const auto [sigma, xi_gpd] = fit_gpd_oracle(excesses);
  const double lambda = static_cast<double>(peaks.size()) / 80.0;

  // Map (lambda, sigma, xi) back to the GEV parameterization.
  const double psi = sigma * std::pow(lambda, xi_gpd);
  const double mu = u - psi * std::expm1(-xi_gpd * std::log(lambda)) / xi_gpd;

  CHECK(std::abs(mu - pp.params.mu) / std::abs(pp.params.mu) < 1e-3);
  CHECK(std::abs(psi - pp.params.psi) / pp.params.psi < 1e-3);
  CHECK(std::abs(xi_gpd - pp.params.xi) / std::abs(pp.params.xi) < 1e-3);
}

TEST_CASE("hessian standard errors agree with a parametric bootstrap") {
  const GevParams truth{500, 200, 0.1};
  const double u = threshold_for_quantile(truth, 0.95, Season::DJF);
  const auto peaks = simulate_pp_exceedances(truth, u, 50.0, 31);
  const FitResult fit = fit_point_process(peaks, u, 50.0);
  REQUIRE(fit.converged);

  const int resamples = 200;
  std::vector<std::array<double, 3>> estimates;
  for (int b = 0; b < resamples; ++b) {
    const auto boot = simulate_pp_exceedances(fit.params, u, 50.0, mix_seed(808, b));
    if (boot.size() < 10) continue;
    const FitResult bf = fit_point_process(boot, u, 50.0);
    if (!bf.converged) continue;
    estimates.push_back({bf.params.mu, bf.params.psi, bf.params.xi});
  }
  REQUIRE(estimates.size() > 150);
  for (int k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (const auto& e : estimates) mean += e[k];
    mean /= estimates.size();
    double var = 0.0;
    for (const auto& e : estimates) var += (e[k] - mean) * (e[k] - mean);
    var /= (estimates.size() - 1);
    const double boot_se = std::sqrt(var);
    const double hess_se = std::sqrt(fit.cov(k, k));
    CHECK(std::abs(hess_se - boot_se) / boot_se < 0.25);
  }
}

TEST_CASE("return_level_with_se and xi_test") {
  FitResult fit;
  fit.params = {0, 1, 0};
  fit.cov = CovMatrix3::Zero();
  fit.converged = true;
  const ReturnLevel rl = return_level_with_se(fit, 100.0);
  CHECK(rl.value == doctest::Approx(std::log(100.0)));
  CHECK(rl.se == 0.0);

  fit.cov(0, 0) = 1.0;
  CHECK(return_level_with_se(fit, 100.0).se == doctest::Approx(1.0));

  FitResult bad;
  bad.converged = false;
  CHECK_THROWS_AS(return_level_with_se(bad, 100.0), std::invalid_argument);

  FitResult t;
  t.converged = true;
  t.params = {0, 1, 0.2};
  t.cov = CovMatrix3::Identity() * (0.08 * 0.08);
  const XiTest right = xi_test(t, TestSide::Right, 0.05);
  CHECK(right.z == doctest::Approx(2.5));
  CHECK(right.critical == doctest::Approx(1.6449).epsilon(1e-4));
  CHECK(right.reject);

  t.params.xi = 0.0;
  CHECK(!xi_test(t, TestSide::Right, 0.05).reject);
  CHECK(!xi_test(t, TestSide::Left, 0.05).reject);

  t.params.xi = -0.2;
  CHECK(xi_test(t, TestSide::Left, 0.05).reject);

  t.cov = CovMatrix3::Zero();
  CHECK_THROWS_AS(xi_test(t, TestSide::Right, 0.05), std::invalid_argument);
}

TEST_CASE("threshold_stability reports rows, not exceptions") {
  SynthConfig cfg;
  cfg.truth = {500, 200, 0.1};
  cfg.n_years = 50;
  cfg.seed = 17;
  const DailySeries s = simulate_daily_series(cfg);

  PreprocessOptions base{Season::DJF, {1950, 1999}, 0.95, 0.1};
  const double pcts[] = {0.95, 0.97};
  const StabilityTable table = threshold_stability(s, base, pcts);
  REQUIRE(table.rows.size() == 2);
  for (const auto& row : table.rows) {
    REQUIRE(row.exclusion.empty());
    REQUIRE(row.fit.has_value());
    REQUIRE(row.level.has_value());
  }
  // Stable parameters: the two return levels agree within their joint spread.
  const double d = std::abs(table.rows[0].level->value - table.rows[1].level->value);
  const double se = std::hypot(table.rows[0].level->se, table.rows[1].level->se);
  CHECK(d < 3.0 * se);

  // Determinism: identical input gives identical rows.
  const StabilityTable again = threshold_stability(s, base, pcts);
  CHECK(again.rows[0].level->value == table.rows[0].level->value);
  CHECK(again.rows[1].level->value == table.rows[1].level->value);

  // A series too short for the 97th percentile still yields a row.
  DailySeries tiny;
  tiny.site_id = "tiny";
  for (int i = 0; i < 30; ++i) {
    tiny.records.push_back({make_date(1990, 12, 1) + std::chrono::days{i}, 1.0});
  }
  PreprocessOptions strict{Season::DJF, {1991, 1991}, 0.95, 1.0};
  const StabilityTable rows2 = threshold_stability(tiny, strict, pcts);
  REQUIRE(rows2.rows.size() == 2);
  CHECK(!rows2.rows[0].exclusion.empty());
}
