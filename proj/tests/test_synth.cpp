#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rainscale/preprocess.hpp"
#include "rainscale/rng.hpp"
#include "rainscale/synth.hpp"

#include <cmath>

using namespace rainscale;

TEST_CASE("exceedance rate and threshold inversion") {
  const GevParams p{500, 200, 0.1};
  const double u = pp_threshold_for_rate(p, 4.5125);
  CHECK(pp_exceedance_rate(p, u) == doctest::Approx(4.5125).epsilon(1e-12));
  // Consistent with the return-level formula at rate 1/n.
  CHECK(pp_threshold_for_rate(p, 1.0 / 100.0) ==
        doctest::Approx(return_level(p, 100.0)).epsilon(1e-12));
}

TEST_CASE("poisson draw matches its mean") {
  Rng rng(101);
  const double lam = 4.5;
  const int reps = 10000;
  long total = 0;
  for (int i = 0; i < reps; ++i) total += rng.poisson(lam);
  const double mean = static_cast<double>(total) / reps;
  CHECK(std::abs(mean - lam) / lam < 0.02);

  // Large means go through the chunked path.
  long big = 0;
  for (int i = 0; i < 2000; ++i) big += rng.poisson(225.0);
  CHECK(std::abs(big / 2000.0 - 225.0) / 225.0 < 0.02);
}

TEST_CASE("poisson draw passes a chi-square goodness-of-fit check") {
  Rng rng(2024);
  const double lam = 4.5;
  const int reps = 10000;
  const int k_max = 12;  // counts >= k_max pool into the tail bin
  std::vector<long> counts(k_max + 1, 0);
  for (int i = 0; i < reps; ++i) {
    const long n = rng.poisson(lam);
    ++counts[std::min<long>(n, k_max)];
  }
  std::vector<double> expected(k_max + 1, 0.0);
  double p = std::exp(-lam);
  double cum = 0.0;
  for (int k = 0; k < k_max; ++k) {
    expected[k] = reps * p;
    cum += p;
    p *= lam / (k + 1);
  }
  expected[k_max] = reps * (1.0 - cum);
  double chi2 = 0.0;
  for (int k = 0; k <= k_max; ++k) {
    const double diff = counts[k] - expected[k];
    chi2 += diff * diff / expected[k];
  }
  // 1% critical value of chi-square with 12 degrees of freedom.
  CHECK(chi2 < 26.217);
}

TEST_CASE("simulated exceedance counts and excess means") {
  const GevParams truth{500, 200, 0.1};
  const double u = threshold_for_quantile(truth, 0.95, Season::DJF);
  const double rate = pp_exceedance_rate(truth, u);
  CHECK(rate == doctest::Approx(0.05 * 90.25).epsilon(1e-12));

  double total_n = 0.0;
  const int reps = 10000;
  for (int i = 0; i < reps; ++i) {
    total_n += static_cast<double>(simulate_pp_exceedances(truth, u, 1.0, mix_seed(7, i)).size());
  }
  CHECK(std::abs(total_n / reps - rate) / rate < 0.02);

  // Gumbel case: excesses are exponential with mean psi.
  const GevParams gumbel{500, 200, 0.0};
  const auto peaks = simulate_pp_exceedances(gumbel, 600.0, 2000.0, 99);
  REQUIRE(peaks.size() > 100);
  double mean_excess = 0.0;
  for (double y : peaks) mean_excess += y - 600.0;
  mean_excess /= static_cast<double>(peaks.size());
  const double se = 200.0 / std::sqrt(static_cast<double>(peaks.size()));
  CHECK(std::abs(mean_excess - 200.0) < 3.0 * se);
}

TEST_CASE("fixed seed reproduces the peak list byte for byte") {
  const GevParams truth{500, 200, 0.1};
  const auto a = simulate_pp_exceedances(truth, 300.0, 50.0, 4242);
  const auto b = simulate_pp_exceedances(truth, 300.0, 50.0, 4242);
  CHECK(a == b);
  const auto c = simulate_pp_exceedances(truth, 300.0, 50.0, 4243);
  CHECK(a != c);
}

TEST_CASE("degenerate configuration is rejected") {
  // xi < 0 puts an upper endpoint at mu - psi/xi = 700; beyond it the rate
  // has no meaning.
  const GevParams truth{500, 200, -1.0};
  CHECK_THROWS_AS(simulate_pp_exceedances(truth, 800.0, 50.0, 1), std::invalid_argument);
}

TEST_CASE("simulated daily series recovers its construction") {
  SynthConfig cfg;
  cfg.truth = {500, 200, 0.1};
  cfg.threshold_quantile = 0.95;
  cfg.n_years = 50;
  cfg.season = Season::DJF;
  cfg.missing_rate = 0.2;
  cfg.seed = 11;

  const DailySeries s = simulate_daily_series(cfg);
  s.validate();

  const double mf = missing_fraction(s, Season::DJF, {1950, 1999});
  CHECK(std::abs(mf - 0.2) < 0.02);

  const DailySeries seasonal = extract_season(s, Season::DJF, {1950, 1999});
  const double u_emp = percentile_threshold(seasonal, 0.95);
  long above = 0, total = 0;
  for (const auto& r : seasonal.records) {
    if (!r.value) continue;
    ++total;
    if (*r.value > u_emp) ++above;
  }
  const double frac_above = static_cast<double>(above) / static_cast<double>(total);
  CHECK(frac_above == doctest::Approx(0.05).epsilon(0.25));

  // Determinism of the whole series.
  const DailySeries s2 = simulate_daily_series(cfg);
  REQUIRE(s.records.size() == s2.records.size());
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    CHECK(s.records[i].date == s2.records[i].date);
    CHECK(s.records[i].value == s2.records[i].value);
  }
}

TEST_CASE("simulate_dataset produces distinct, sorted, complete pieces") {
  DatasetConfig dc;
  dc.n_stations = 8;
  dc.grid_nlat = 2;
  dc.grid_nlon = 2;
  dc.base.n_years = 5;
  dc.seed = 3;
  const Dataset data = simulate_dataset(dc);
  REQUIRE(data.stations.size() == 8);
  REQUIRE(data.cells.size() == 4);
  for (const auto& st : data.stations) {
    st.validate();
    CHECK(st.elev.has_value());
  }
  for (const auto& c : data.cells) {
    c.validate();
    CHECK(!c.elev.has_value());
  }
  for (std::size_t i = 1; i < data.stations.size(); ++i) {
    CHECK(data.stations[i - 1].site_id < data.stations[i].site_id);
  }
}
