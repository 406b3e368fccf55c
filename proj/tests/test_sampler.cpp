#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cssm/experiments.hpp"
#include "cssm/sampler.hpp"
#include "cssm/synth.hpp"

using namespace cssm;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double se_mean = 0.0;
  double se_var = 0.0;
};

Moments sample_moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m.var = m2 / (n - 1.0);
  m4 /= n;
  m.se_mean = std::sqrt(m.var / n);
  m.se_var = std::sqrt(std::max(0.0, m4 - m.var * m.var) / n);
  return m;
}

}  // namespace

TEST_CASE("latent full conditionals match their Gaussian algebra") {
  Rng rng(42);
  const int n = 100000;

  SUBCASE("interior, with an observation") {
    const double pred_left = 10.0, phi_left = 0.5;
    const double a_r = 0.9, b_r = 1.5, next = 11.0, phi_right = 0.8;
    const double obs_prec = 2.0, obs_sum = 2.0 * 10.4;
    const double prec = phi_left + a_r * a_r * phi_right + obs_prec;
    const double mean =
        (phi_left * pred_left + a_r * phi_right * (next - b_r) + obs_sum) / prec;

    std::vector<double> draws(n);
    for (double& d : draws) {
      d = gibbs_latent_interior(rng, pred_left, phi_left, a_r, b_r, next,
                                phi_right, obs_prec, obs_sum);
    }
    const Moments m = sample_moments(draws);
    CHECK(std::abs(m.mean - mean) < 4.0 * m.se_mean);
    CHECK(std::abs(m.var - 1.0 / prec) < 4.0 * m.se_var);
  }

  SUBCASE("initial, prior anchored") {
    const double mu0 = 100.0, phi0 = 0.01;
    const double a_r = 0.95, b_r = 2.0, next = 97.0, phi_right = 0.2;
    const double prec = phi0 + a_r * a_r * phi_right;
    const double mean = (phi0 * mu0 + a_r * phi_right * (next - b_r)) / prec;

    std::vector<double> draws(n);
    for (double& d : draws) {
      d = gibbs_latent_initial(rng, mu0, phi0, a_r, b_r, next, phi_right, 0.0,
                               0.0);
    }
    const Moments m = sample_moments(draws);
    CHECK(std::abs(m.mean - mean) < 4.0 * m.se_mean);
    CHECK(std::abs(m.var - 1.0 / prec) < 4.0 * m.se_var);
  }

  SUBCASE("final, observed") {
    const double pred_left = 55.0, phi_left = 0.3;
    const double obs_prec = 1.1, obs_sum = 1.1 * 54.0;
    const double prec = phi_left + obs_prec;
    const double mean = (phi_left * pred_left + obs_sum) / prec;

    std::vector<double> draws(n);
    for (double& d : draws) {
      d = gibbs_latent_final(rng, pred_left, phi_left, obs_prec, obs_sum);
    }
    const Moments m = sample_moments(draws);
    CHECK(std::abs(m.mean - mean) < 4.0 * m.se_mean);
    CHECK(std::abs(m.var - 1.0 / prec) < 4.0 * m.se_var);
  }
}

TEST_CASE("precision conditional is the conjugate Gamma") {
  Rng rng(7);
  const int n_windows = 24;
  const double rate = 3.7;
  const int n = 200000;
  std::vector<double> draws(n);
  for (double& d : draws) d = gibbs_precision(rng, n_windows, rate);

  const double shape = 0.5 * n_windows;
  const Moments m = sample_moments(draws);
  CHECK(std::abs(m.mean - shape / rate) < 4.0 * m.se_mean);
  CHECK(std::abs(m.var - shape / (rate * rate)) < 4.0 * m.se_var);

  // Zero residuals: the rate floor keeps the draw finite rather than
  // collapsing the distribution onto +infinity.
  const double degenerate = gibbs_precision(rng, 4, 0.0);
  CHECK(std::isfinite(degenerate));
  CHECK(degenerate > 0.0);
}

TEST_CASE("correlation blocks group transitively above the threshold") {
  Rng rng(3);
  const int n = 4000;
  Eigen::MatrixXd samples(n, 5);
  for (int i = 0; i < n; ++i) {
    const double z = draw_normal(rng, 0.0, 1.0);
    const double y = draw_normal(rng, 0.0, 1.0);
    samples(i, 0) = z;
    samples(i, 1) = 0.9 * z + 0.2 * draw_normal(rng, 0.0, 1.0);
    samples(i, 2) = draw_normal(rng, 0.0, 1.0);
    samples(i, 3) = 0.9 * y + 0.2 * draw_normal(rng, 0.0, 1.0);
    samples(i, 4) = y;
  }
  const auto blocks = correlation_blocks(samples, 0.5);
  REQUIRE(blocks.size() == 3);
  std::vector<std::vector<int>> sorted = blocks;
  for (auto& b : sorted) std::sort(b.begin(), b.end());
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted[0] == std::vector<int>{0, 1});
  CHECK(sorted[1] == std::vector<int>{2});
  CHECK(sorted[2] == std::vector<int>{3, 4});
}

TEST_CASE("block proposal density matches the generator exactly") {
  Rng rng(11);
  PriorSpec priors;
  BlockProposal block;
  block.idx = {1, 3, 10};
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(3, 3);
  chol << 0.02, 0.0, 0.0, 0.01, 0.03, 0.0, 0.1, -0.2, 0.8;
  block.chol = chol;

  ParameterVector current = 0.5 * (priors.lower + priors.upper);
  for (int rep = 0; rep < 50; ++rep) {
    ParameterVector proposed;
    const double fwd = propose_block_tn(rng, block, current, priors.lower,
                                        priors.upper, &proposed);
    const double recomputed =
        block_tn_logpdf(block, current, proposed, priors.lower, priors.upper);
    CHECK(fwd == doctest::Approx(recomputed).epsilon(1e-12));
    for (int k = 0; k < 3; ++k) {
      const int i = block.idx[static_cast<std::size_t>(k)];
      CHECK(proposed[i] > priors.lower[i]);
      CHECK(proposed[i] < priors.upper[i]);
    }
    current = proposed;
  }
}

TEST_CASE("truncated-normal Metropolis on a flat box target stays uniform") {
  // On a flat target the only rejections come from truncation-mass asymmetry
  // near the bounds, so acceptance must rise toward 1 as the step shrinks,
  // and the exact Hastings correction must leave the marginals uniform.
  PriorSpec priors;
  auto run_flat = [&](double sd_divisor, std::vector<double>* kept) {
    Rng rng(19);
    BlockProposal block;
    block.idx.resize(kNumParams);
    Eigen::VectorXd sds(kNumParams);
    for (int i = 0; i < kNumParams; ++i) {
      block.idx[static_cast<std::size_t>(i)] = i;
      sds[i] = (priors.upper[i] - priors.lower[i]) / sd_divisor;
    }
    block.chol = sds.asDiagonal();

    ParameterVector x = 0.5 * (priors.lower + priors.upper);
    const int steps = 60000;
    int accepted = 0;
    for (int it = 0; it < steps; ++it) {
      ParameterVector cand;
      const double fwd =
          propose_block_tn(rng, block, x, priors.lower, priors.upper, &cand);
      const double rev =
          block_tn_logpdf(block, cand, x, priors.lower, priors.upper);
      if (std::log(draw_uniform(rng)) < rev - fwd) {
        x = cand;
        ++accepted;
      }
      if (kept != nullptr && it % 20 == 0) {
        kept->push_back((x[4] - priors.lower[4]) /
                        (priors.upper[4] - priors.lower[4]));
      }
    }
    return static_cast<double>(accepted) / steps;
  };

  std::vector<double> kept;
  const double acc_wide = run_flat(20.0, &kept);
  const double acc_tight = run_flat(200.0, nullptr);
  CHECK(acc_wide > 0.80);
  CHECK(acc_tight > acc_wide);
  CHECK(acc_tight > 0.97);

  std::sort(kept.begin(), kept.end());
  double ks = 0.0;
  const double n = static_cast<double>(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const double ecdf = (static_cast<double>(i) + 1.0) / n;
    ks = std::max(ks, std::abs(ecdf - kept[i]));
  }
  // Correlated walk: compare against a generous bound rather than the iid
  // critical value. A missing Hastings term shifts mass toward the center
  // and fails this by a wide margin.
  CHECK(ks < 0.08);
}

TEST_CASE("run_mcmc is deterministic and jobs-invariant") {
  DriverSeries drivers = synthetic_drivers(60);
  PriorSpec priors;
  AcmConfig acm;
  Scenario sc;
  sc.stock_frequency = "daily";
  sc.horizon_days = 60;
  sc.seed = 31;
  const Dataset ds = generate_study(sc, study_params(), drivers, priors, acm).front();

  FitSpec spec;
  spec.mcmc.total_iterations = 400;
  spec.mcmc.burn_in = 150;
  spec.mcmc.seed = 5;
  spec.mcmc.chains = 2;
  spec.init.mode = InitStrategy::Mode::kTruthDebug;

  const FitResult a = fit_dataset(ds.obs, drivers, spec, &ds.truth);
  const FitResult b = fit_dataset(ds.obs, drivers, spec, &ds.truth);
  CHECK(a.chains[0].params == b.chains[0].params);
  CHECK(a.chains[0].precisions == b.chains[0].precisions);
  CHECK(a.chains[1].params == b.chains[1].params);

  FitSpec threaded = spec;
  threaded.mcmc.jobs = 2;
  const FitResult c = fit_dataset(ds.obs, drivers, threaded, &ds.truth);
  CHECK(a.chains[0].params == c.chains[0].params);
  CHECK(a.chains[1].params == c.chains[1].params);
  CHECK(a.chains[1].seed == c.chains[1].seed);
}

TEST_CASE("sampler config validation") {
  MCMCConfig config;
  config.burn_in = config.total_iterations;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = MCMCConfig{};
  config.chains = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = MCMCConfig{};
  config.jobs = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = MCMCConfig{};
  config.latent_thin = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
}
