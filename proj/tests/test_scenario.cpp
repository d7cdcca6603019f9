#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rainscale/rng.hpp"
#include "rainscale/scenario.hpp"
#include "rainscale/synth.hpp"

#include <algorithm>
#include <cmath>

using namespace rainscale;

namespace {

DailySeries one_day_series(const std::string& id, std::optional<double> v) {
  DailySeries s;
  s.site_id = id;
  s.records.push_back({make_date(1990, 1, 15), v});
  return s;
}

}  // namespace

TEST_CASE("station averaging includes zeros and omits missing") {
  {
    const DailySeries avg =
        station_average_series(std::vector<DailySeries>{one_day_series("a", 10.0),
                                                        one_day_series("b", 20.0)});
    REQUIRE(avg.records.size() == 1);
    CHECK(avg.records[0].value == 15.0);
  }
  {
    const DailySeries avg =
        station_average_series(std::vector<DailySeries>{one_day_series("a", std::nullopt),
                                                        one_day_series("b", 20.0)});
    CHECK(avg.records[0].value == 20.0);
  }
  {
    const DailySeries avg = station_average_series(
        std::vector<DailySeries>{one_day_series("a", 0.0), one_day_series("b", 0.0)});
    CHECK(avg.records[0].value == 0.0);
  }
  {
    const DailySeries avg = station_average_series(
        std::vector<DailySeries>{one_day_series("a", std::nullopt),
                                 one_day_series("b", std::nullopt)});
    CHECK(!avg.records[0].value.has_value());  // all missing -> day missing
  }
}

TEST_CASE("station averaging commutes with reordering") {
  SynthConfig cfg;
  cfg.n_years = 3;
  std::vector<DailySeries> stations;
  for (int i = 0; i < 4; ++i) {
    cfg.seed = 100 + i;
    cfg.missing_rate = 0.1;
    stations.push_back(simulate_daily_series(cfg));
  }
  const DailySeries fwd = station_average_series(stations);
  std::reverse(stations.begin(), stations.end());
  const DailySeries rev = station_average_series(stations);
  REQUIRE(fwd.records.size() == rev.records.size());
  for (std::size_t i = 0; i < fwd.records.size(); ++i) {
    CHECK(fwd.records[i].date == rev.records[i].date);
    CHECK(fwd.records[i].value == rev.records[i].value);
  }
}

TEST_CASE("triple comparison with one station equal to the grid gives a = b = c") {
  SynthConfig cfg;
  cfg.truth = {500, 200, 0.1};
  cfg.n_years = 50;
  cfg.seed = 21;
  DailySeries st = simulate_daily_series(cfg);
  st.site_id = "only";
  DailySeries grid = st;
  grid.site_id = "cell";

  TripleOptions opt;
  opt.prep = {Season::DJF, {1950, 1999}, 0.95, 0.1};
  const TripleComparison t = triple_comparison({&st, 1}, grid, opt);
  REQUIRE(t.station_avg_return.has_value());
  REQUIRE(t.grid_return.has_value());
  REQUIRE(t.mean_station_return.has_value());
  CHECK(*t.station_avg_return == *t.grid_return);
  CHECK(*t.mean_station_return == *t.grid_return);
  CHECK(*t.ratio_ab == doctest::Approx(1.0));
  CHECK(*t.ratio_cb == doctest::Approx(1.0));
  CHECK(t.n_stations_used == 1);
}

TEST_CASE("averaging before extremes damps tails: c >= a most of the time") {
  int hold = 0;
  const int reps = 12;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<DailySeries> stations;
    for (int i = 0; i < 6; ++i) {
      SynthConfig cfg;
      // Heterogeneous station climates.
      const double scale = 0.6 + 0.25 * i;
      cfg.truth = {500.0 * scale, 200.0 * scale, 0.05 + 0.02 * i};
      cfg.n_years = 50;
      cfg.seed = mix_seed(9000 + rep, i);
      stations.push_back(simulate_daily_series(cfg));
      stations.back().site_id = "st" + std::to_string(i);
    }
    const DailySeries avg = station_average_series(stations);
    TripleOptions opt;
    opt.prep = {Season::DJF, {1950, 1999}, 0.95, 0.1};
    const TripleComparison t = triple_comparison(stations, avg, opt);
    if (t.station_avg_return && t.mean_station_return &&
        *t.mean_station_return >= *t.station_avg_return) {
      ++hold;
    }
  }
  CHECK(hold >= reps * 9 / 10);
}

TEST_CASE("published grid-cell fixture gives the expected ratios") {
  // 100-year winter returns for one well-populated cell: 741 from the
  // station-averaged series, 429 from the grid series, 1170 as the mean of
  // per-station returns.
  TripleComparison t;
  t.station_avg_return = 741.0;
  t.grid_return = 429.0;
  t.mean_station_return = 1170.0;
  t.ratio_ab = *t.station_avg_return / *t.grid_return;
  t.ratio_cb = *t.mean_station_return / *t.grid_return;
  CHECK(*t.ratio_ab == doctest::Approx(1.73).epsilon(0.005));
  CHECK(*t.ratio_cb == doctest::Approx(2.73).epsilon(0.005));
}

TEST_CASE("future_present_ratio formula and errors") {
  const RatioResult r = future_present_ratio({200.0, 10.0, 100.0}, {100.0, 5.0, 100.0});
  CHECK(r.ratio == doctest::Approx(2.0));
  CHECK(r.se == doctest::Approx(2.0 * std::sqrt(0.0025 + 0.0025)).epsilon(1e-12));

  const RatioResult eq = future_present_ratio({150.0, 0.0, 100.0}, {150.0, 0.0, 100.0});
  CHECK(eq.ratio == 1.0);
  CHECK(eq.se == 0.0);

  CHECK_THROWS_AS(future_present_ratio({200.0, 1.0, 100.0}, {0.0, 1.0, 100.0}),
                  std::domain_error);
}

TEST_CASE("ratio swap antisymmetry") {
  Rng rng(40);
  for (int i = 0; i < 200; ++i) {
    const ReturnLevel a{rng.uniform(50.0, 500.0), rng.uniform(0.0, 20.0), 100.0};
    const ReturnLevel b{rng.uniform(50.0, 500.0), rng.uniform(0.0, 20.0), 100.0};
    const RatioResult fwd = future_present_ratio(a, b);
    const RatioResult rev = future_present_ratio(b, a);
    CHECK(rev.ratio == doctest::Approx(1.0 / fwd.ratio).epsilon(1e-12));
    CHECK(rev.se / rev.ratio == doctest::Approx(fwd.se / fwd.ratio).epsilon(1e-12));
  }
}

TEST_CASE("ratio SE matches Monte Carlo for small CVs") {
  const ReturnLevel fut{200.0, 10.0, 100.0};
  const ReturnLevel pre{100.0, 5.0, 100.0};
  const RatioResult r = future_present_ratio(fut, pre);

  Rng rng(4141);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = fut.value + fut.se * rng.normal();
    const double p = pre.value + pre.se * rng.normal();
    const double v = f / p;
    sum += v;
    sum2 += v * v;
  }
  const double sd = std::sqrt((sum2 - sum * sum / n) / (n - 1));
  CHECK(r.se == doctest::Approx(sd).epsilon(0.05));
}

TEST_CASE("significance indicators") {
  RatioResult r;
  r.ratio = 2.0;
  r.se = 0.14;
  CHECK(ratio_significance(r).plain);
  CHECK(ratio_significance(r).log_scale);

  r.ratio = 1.05;
  r.se = 0.10;
  CHECK(!ratio_significance(r).plain);
  CHECK(!ratio_significance(r).log_scale);

  r.ratio = 1.0;
  r.se = 0.0;
  CHECK(!ratio_significance(r).plain);
  CHECK(!ratio_significance(r).log_scale);
}

TEST_CASE("plain and log indicators agree at small CV away from the boundary") {
  for (double ratio : {0.80, 0.90, 0.95, 1.00, 1.02, 1.05, 1.15, 1.25, 1.50, 2.00}) {
    for (double cv : {0.005, 0.01, 0.02, 0.03, 0.04, 0.049}) {
      RatioResult r;
      r.ratio = ratio;
      r.se = cv * ratio;
      const SignificanceIndicator ind = ratio_significance(r);
      INFO("ratio=", ratio, " cv=", cv);
      CHECK(ind.plain == ind.log_scale);
    }
  }
}
