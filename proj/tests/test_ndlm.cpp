#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cssm/ndlm.hpp"

using namespace cssm;

namespace {

ParameterVector study_params() {
  ParameterVector p;
  p << 0.002, 0.27, 0.15, 0.33, 0.00137, 1.1e-4, 0.00137, 0.1, 1.096e-5,
      0.1725, 3.0;
  return p;
}

DriverRecord mild_day(double t_mean = 10.0) {
  DriverRecord d;
  d.day = 50;
  d.t_min = t_mean - 5.0;
  d.t_mean = t_mean;
  d.t_max = t_mean + 5.0;
  d.radiation = 12.0;
  d.co2 = 410.0;
  return d;
}

}  // namespace

TEST_CASE("affine coefficients: foliage") {
  Vec5 others = Vec5::Zero();
  const AffineTransition tr =
      affine_coefficients(kFoliage, study_params(), mild_day(), others, 10.0);
  CHECK(tr.a == doctest::Approx(1.0 - 0.00137));
  CHECK(tr.b == doctest::Approx(10.0 * (1.0 - 0.27) * 0.15));
}

TEST_CASE("affine coefficients: wood with zero rates") {
  ParameterVector p = ParameterVector::Zero();
  Vec5 others = Vec5::Zero();
  const AffineTransition tr =
      affine_coefficients(kWood, p, mild_day(), others, 0.0);
  CHECK(tr.a == doctest::Approx(1.0));
  CHECK(tr.b == doctest::Approx(0.0));
}

TEST_CASE("affine coefficients: litter folds cross-stock inflow into b") {
  Vec5 others;
  others << 100.0, 100.0, 0.0, 0.0, 0.0;
  const AffineTransition tr = affine_coefficients(
      kLitter, study_params(), mild_day(10.0), others, 10.0);
  CHECK(tr.b == doctest::Approx(0.00137 * 100.0 + 0.00137 * 100.0));
  CHECK(tr.a == doctest::Approx(1.0 - 0.001 * std::exp(1.725)));
}

TEST_CASE("affine coefficients reproduce step_mean stock by stock") {
  std::mt19937_64 rng(7);
  const ParameterVector lo = param_lower_bounds();
  const ParameterVector hi = param_upper_bounds();
  for (int rep = 0; rep < 30; ++rep) {
    ParameterVector p;
    for (int i = 0; i < kNumParams; ++i) {
      p[i] = lo[i] + (hi[i] - lo[i]) *
                         std::uniform_real_distribution<double>(0, 1)(rng);
    }
    Vec5 c;
    for (int i = 0; i < kNumStocks; ++i) {
      c[i] = std::uniform_real_distribution<double>(10.0, 15000.0)(rng);
    }
    const DriverRecord d =
        mild_day(std::uniform_real_distribution<double>(-5, 30)(rng));
    const double g = std::uniform_real_distribution<double>(0.0, 12.0)(rng);
    const Vec5 expected = step_mean(c, d, p, g);
    for (int s = 0; s < kNumStocks; ++s) {
      const AffineTransition tr =
          affine_coefficients(static_cast<Stock>(s), p, d, c, g);
      CHECK(tr.a * c[s] + tr.b == doctest::Approx(expected[s]).epsilon(1e-12));
    }
  }
}

TEST_CASE("composition: single step is the identity") {
  const AffineTransition s{0.98, 1.3, 2.5};
  const AffineTransition out = compose_transition({s});
  CHECK(out.a == doctest::Approx(0.98));
  CHECK(out.b == doctest::Approx(1.3));
  CHECK(out.phi == doctest::Approx(2.5));
}

TEST_CASE("composition: random walk variance sums linearly") {
  const double phi = 4.0;
  std::vector<AffineTransition> steps(30, AffineTransition{1.0, 0.0, phi});
  const AffineTransition out = compose_transition(steps);
  CHECK(out.a == doctest::Approx(1.0));
  CHECK(out.b == doctest::Approx(0.0));
  CHECK(out.phi == doctest::Approx(phi / 30.0));
}

TEST_CASE("composition: two equal steps, hand algebra") {
  const double a = 0.95, beta = 2.0, phi = 0.5;
  const AffineTransition out =
      compose_transition({{a, beta, phi}, {a, beta, phi}});
  CHECK(out.a == doctest::Approx(a * a));
  CHECK(out.b == doctest::Approx(a * beta + beta));
  CHECK(1.0 / out.phi == doctest::Approx((a * a + 1.0) / phi));
}

TEST_CASE("window chaining is associative and matches flat composition") {
  const AffineTransition s1{0.97, 1.0, 3.0}, s2{1.02, -0.4, 3.0},
      s3{0.97, 0.7, 3.0};
  const WindowTransition w1 = compose_window({s1}), w2 = compose_window({s2}),
                         w3 = compose_window({s3});
  const WindowTransition left = chain_windows(chain_windows(w1, w2), w3);
  const WindowTransition right = chain_windows(w1, chain_windows(w2, w3));
  const WindowTransition flat = compose_window({s1, s2, s3});

  for (const WindowTransition& w : {left, right}) {
    CHECK(w.a == doctest::Approx(flat.a).epsilon(1e-12));
    CHECK(w.b == doctest::Approx(flat.b).epsilon(1e-12));
    CHECK(w.w == doctest::Approx(flat.w).epsilon(1e-12));
  }
}

TEST_CASE("composition matches monte carlo simulation") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ua(0.9, 1.1), ub(-1.0, 1.0);
  const double phi = 4.0;
  const double sd = 1.0 / std::sqrt(phi);

  std::vector<AffineTransition> steps;
  for (int j = 0; j < 10; ++j) steps.push_back({ua(rng), ub(rng), phi});
  const AffineTransition composed = compose_transition(steps);

  const double c0 = 2.0;
  const int n = 100000;
  std::normal_distribution<double> noise(0.0, sd);
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double c = c0;
    for (const AffineTransition& s : steps) c = s.a * c + s.b + noise(rng);
    sum += c;
    sumsq += c * c;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;

  const double expect_mean = composed.a * c0 + composed.b;
  const double expect_var = 1.0 / composed.phi;
  const double se_mean = std::sqrt(expect_var / n);
  const double se_var = expect_var * std::sqrt(2.0 / (n - 1.0));

  CHECK(std::fabs(mean - expect_mean) < 4.0 * se_mean);
  CHECK(std::fabs(var - expect_var) < 4.0 * se_var);
}

TEST_CASE("composition rejects mixed precisions and empty input") {
  CHECK_THROWS_AS(compose_transition({}), ConfigError);
  CHECK_THROWS_AS(compose_transition({{1.0, 0.0, 1.0}, {1.0, 0.0, 2.0}}),
                  ConfigError);
}

TEST_CASE("latent grid validation") {
  CHECK_NOTHROW(daily_grid(10).validate(10));
  CHECK(daily_grid(10).num_windows() == 10);
  CHECK(daily_grid(10).is_daily(10));

  LatentGrid g;
  g.anchor_times = {1, 5, 10};
  CHECK_THROWS_AS(g.validate(10), ConfigError);  // must start at 0
  g.anchor_times = {0, 5, 9};
  CHECK_THROWS_AS(g.validate(10), ConfigError);  // must end at horizon
  g.anchor_times = {0, 5, 5, 10};
  CHECK_THROWS_AS(g.validate(10), ConfigError);  // strictly increasing
  g.anchor_times = {0};
  CHECK_THROWS_AS(g.validate(0), ConfigError);   // needs two anchors

  const LatentGrid monthly = stepped_grid(730, 30);
  CHECK(monthly.anchor_times.front() == 0);
  CHECK(monthly.anchor_times.back() == 730);
  CHECK_FALSE(monthly.is_daily(730));

  // Extra anchors (observation times) are folded in and deduplicated.
  const LatentGrid with_obs = stepped_grid(730, 30, {365, 60});
  bool has365 = false;
  for (int t : with_obs.anchor_times) has365 = has365 || (t == 365);
  CHECK(has365);
  for (std::size_t i = 1; i < with_obs.anchor_times.size(); ++i) {
    CHECK(with_obs.anchor_times[i] > with_obs.anchor_times[i - 1]);
  }

  CHECK_THROWS_AS(explicit_grid({0, 400, 730}, 365), ConfigError);
}

TEST_CASE("coarsen: daily grid is the identity") {
  std::vector<AffineTransition> daily;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ua(0.95, 1.05), ub(-0.5, 0.5);
  for (int t = 0; t < 40; ++t) daily.push_back({ua(rng), ub(rng), 2.0});

  const auto out = coarsen(daily, daily_grid(40), PrecisionMode::kExact);
  REQUIRE(out.size() == daily.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].a == doctest::Approx(daily[i].a));
    CHECK(out[i].b == doctest::Approx(daily[i].b));
    CHECK(out[i].phi == doctest::Approx(daily[i].phi));
  }
}

TEST_CASE("coarsen: single window over a random walk") {
  const int horizon = 25;
  std::vector<AffineTransition> daily(horizon, AffineTransition{1.0, 0.0, 3.0});
  const auto out =
      coarsen(daily, explicit_grid({0, horizon}, horizon), PrecisionMode::kExact);
  REQUIRE(out.size() == 1);
  CHECK(out[0].a == doctest::Approx(1.0));
  CHECK(out[0].b == doctest::Approx(0.0));
  CHECK(out[0].phi == doctest::Approx(3.0 / horizon));
}

TEST_CASE("coarsen preserves the deterministic chain at anchors") {
  // Two years of slowly varying transitions, composed to a monthly grid: the
  // chained means must agree with the daily chain at every anchor.
  const int horizon = 730;
  std::vector<AffineTransition> daily;
  for (int t = 1; t <= horizon; ++t) {
    const double a = 1.0 - 0.002 * (1.0 + 0.3 * std::sin(t / 58.0));
    const double b = 0.8 + 0.4 * std::cos(t / 91.0);
    daily.push_back({a, b, 10.0});
  }
  const LatentGrid grid = stepped_grid(horizon, 30);
  const auto composed = coarsen(daily, grid, PrecisionMode::kExact);
  REQUIRE(static_cast<int>(composed.size()) == grid.num_windows());

  double c_daily = 500.0;
  std::size_t widx = 0;
  double c_coarse = c_daily;
  for (int t = 1; t <= horizon; ++t) {
    c_daily = daily[t - 1].a * c_daily + daily[t - 1].b;
    if (grid.anchor_times[widx + 1] == t) {
      c_coarse = composed[widx].a * c_coarse + composed[widx].b;
      CHECK(c_daily == doctest::Approx(c_coarse).epsilon(1e-9));
      ++widx;
    }
  }
  CHECK(widx == composed.size());
}

TEST_CASE("coarsen pooled mode applies the free precision everywhere") {
  std::vector<AffineTransition> daily(60, AffineTransition{0.999, 0.1, 5.0});
  const auto out = coarsen(daily, stepped_grid(60, 30), PrecisionMode::kPooled,
                           7.25);
  REQUIRE(out.size() == 2);
  for (const auto& w : out) CHECK(w.phi == doctest::Approx(7.25));
  // Means are still the exact composition.
  double c = 100.0;
  for (int t = 0; t < 30; ++t) c = 0.999 * c + 0.1;
  CHECK(out[0].a * 100.0 + out[0].b == doctest::Approx(c).epsilon(1e-12));
}
