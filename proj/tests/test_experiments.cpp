#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "cssm/experiments.hpp"

using namespace cssm;

TEST_CASE("latent grids union observation times into the anchors") {
  ObservationSet obs;
  obs.horizon = 200;
  obs.stock_obs[kFoliage] = {{0, 100.0}, {47, 101.0}, {200, 99.0}};
  obs.stock_obs[kWood] = {{13, 9000.0}};

  const LatentState monthly = build_latent_state("monthly", 200, obs);
  for (int s = 0; s < kNumStocks; ++s) {
    const auto& anchors = monthly.grids[s].anchor_times;
    CHECK(anchors.front() == 0);
    CHECK(anchors.back() == 200);
    CHECK(std::is_sorted(anchors.begin(), anchors.end()));
    CHECK(std::count(anchors.begin(), anchors.end(), 30) == 1);
  }
  const auto& cf = monthly.grids[kFoliage].anchor_times;
  CHECK(std::count(cf.begin(), cf.end(), 47) == 1);
  const auto& cw = monthly.grids[kWood].anchor_times;
  CHECK(std::count(cw.begin(), cw.end(), 13) == 1);
  // Other stocks keep the plain stepped grid.
  const auto& cr = monthly.grids[kRoots].anchor_times;
  CHECK(std::count(cr.begin(), cr.end(), 47) == 0);

  const LatentState daily = build_latent_state("daily", 200, obs);
  for (int s = 0; s < kNumStocks; ++s) {
    CHECK(daily.grids[s].is_daily(200));
    CHECK(static_cast<int>(daily.grids[s].anchor_times.size()) == 201);
  }
}

TEST_CASE("explicit latent grids parse the bracketed time list") {
  ObservationSet obs;
  obs.horizon = 730;
  const LatentState state = build_latent_state("explicit:[0,100,730]", 730, obs);
  for (int s = 0; s < kNumStocks; ++s) {
    const std::vector<int> expect = {0, 100, 730};
    CHECK(state.grids[s].anchor_times == expect);
  }
  CHECK_THROWS_AS(build_latent_state("weekly", 730, obs), ConfigError);
  CHECK_THROWS_AS(build_latent_state("explicit:[0,abc,730]", 730, obs),
                  ConfigError);
}

TEST_CASE("chain initialization reads anchors off the trajectory") {
  ObservationSet obs;
  obs.horizon = 90;
  const LatentState state = build_latent_state("monthly", 90, obs);

  Eigen::MatrixXd trajectory(91, kNumStocks);
  for (int t = 0; t <= 90; ++t) {
    for (int s = 0; s < kNumStocks; ++s) {
      trajectory(t, s) = 1000.0 * (s + 1) + t;
    }
  }
  PriorSpec priors;
  Vec5 phi = Vec5::Constant(0.5);
  const ChainInit init =
      make_chain_init(state, trajectory, study_params(), phi);
  CHECK((init.params - study_params()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((init.phi - phi).cwiseAbs().maxCoeff() == 0.0);
  for (int s = 0; s < kNumStocks; ++s) {
    const auto& anchors = state.grids[s].anchor_times;
    REQUIRE(init.state.anchors[s].size() == anchors.size());
    for (std::size_t k = 0; k < anchors.size(); ++k) {
      CHECK(init.state.anchors[s][k] == trajectory(anchors[k], s));
    }
  }
}

TEST_CASE("fit_dataset produces usable chains and diagnostics inputs") {
  const int horizon = 60;
  DriverSeries drivers = synthetic_drivers(horizon);
  PriorSpec priors;
  AcmConfig acm;
  Scenario sc;
  sc.stock_frequency = "monthly";
  sc.horizon_days = horizon;
  sc.seed = 3;
  const Dataset ds = generate_study(sc, study_params(), drivers, priors, acm).front();

  FitSpec spec;
  spec.latent_step = "monthly";
  spec.mcmc.total_iterations = 300;
  spec.mcmc.burn_in = 100;
  spec.mcmc.chains = 2;
  spec.mcmc.seed = 8;
  spec.mcmc.latent_thin = 5;
  spec.init.mode = InitStrategy::Mode::kTruthDebug;

  const FitResult fit = fit_dataset(ds.obs, drivers, spec, &ds.truth);
  REQUIRE(fit.chains.size() == 2);
  for (const ChainOutput& chain : fit.chains) {
    CHECK(chain.params.rows() == 300);
    CHECK(chain.post_params().rows() == 200);
    CHECK(chain.accept_rate.maxCoeff() > 0.0);
    CHECK(chain.accept_rate.minCoeff() >= 0.0);
    CHECK(chain.accept_rate.maxCoeff() <= 1.0);
    for (int s = 0; s < kNumStocks; ++s) {
      CHECK(chain.latents[s].rows() == 40);  // post-burn-in every 5th draw
      CHECK(chain.latents[s].allFinite());
    }
    CHECK(std::isfinite(mean_log_ess_precisions(chain)));
  }
  // Distinct seeds: the two chains move differently.
  CHECK((fit.chains[0].params - fit.chains[1].params).cwiseAbs().maxCoeff() >
        0.0);

  const ParameterVector rhat = rhat_params(fit.chains);
  for (int i = 0; i < kNumParams; ++i) {
    CHECK(std::isfinite(rhat[i]));
    CHECK(rhat[i] >= 1.0 - 1e-9);
  }

  const CoverageScore score = score_coverage(fit.chains[0], fit.state, ds.truth);
  for (int s = 0; s < kNumStocks; ++s) {
    CHECK(score.latent_coverage[s] >= 0.0);
    CHECK(score.latent_coverage[s] <= 1.0);
  }
}

TEST_CASE("coverage scoring requires stored latent draws") {
  const int horizon = 60;
  DriverSeries drivers = synthetic_drivers(horizon);
  PriorSpec priors;
  AcmConfig acm;
  Scenario sc;
  sc.stock_frequency = "monthly";
  sc.horizon_days = horizon;
  sc.seed = 3;
  const Dataset ds = generate_study(sc, study_params(), drivers, priors, acm).front();

  FitSpec spec;
  spec.latent_step = "monthly";
  spec.mcmc.total_iterations = 100;
  spec.mcmc.burn_in = 50;
  spec.mcmc.store_latents = false;
  spec.init.mode = InitStrategy::Mode::kTruthDebug;
  const FitResult fit = fit_dataset(ds.obs, drivers, spec, &ds.truth);
  CHECK_THROWS_AS(score_coverage(fit.chains[0], fit.state, ds.truth),
                  ConfigError);
}

TEST_CASE("cloning rejects malformed clone ladders") {
  DriverSeries drivers = synthetic_drivers(60);
  ObservationSet obs;
  obs.horizon = 60;
  obs.stock_obs[kFoliage] = {{0, 100.0}, {60, 102.0}};
  FitSpec spec;
  spec.mcmc.total_iterations = 20;
  spec.mcmc.burn_in = 10;
  CHECK_THROWS_AS(run_cloning(obs, drivers, spec, {}), ConfigError);
  CHECK_THROWS_AS(run_cloning(obs, drivers, spec, {5, 1}), ConfigError);
  CHECK_THROWS_AS(run_cloning(obs, drivers, spec, {0, 5}), ConfigError);
}
