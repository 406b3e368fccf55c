#ifndef CSSM_SAMPLER_HPP
#define CSSM_SAMPLER_HPP

#include <cstdint>
#include <vector>

#include "cssm/likelihood.hpp"
#include "cssm/priors.hpp"
#include "cssm/rng.hpp"

namespace cssm {

struct MCMCConfig {
  int total_iterations = 10000;
  int burn_in = 2000;
  int block_refresh = 500;   // post-burn-in covariance refresh cadence
  int adapt_interval = 100;  // burn-in univariate scale adaptation batch
  double target_accept = 0.44;
  double corr_threshold = 0.5;  // |rho| above which parameters share a block
  double cov_ridge = 1e-12;  // diagonal ridge, relative to squared bound width
  double block_scale = 0.0;  // <= 0 means the standard 2.38^2 / dim
  int latent_thin = 10;
  bool store_latents = true;
  std::uint64_t seed = 1;
  int chains = 1;
  int jobs = 1;  // worker threads for the chain fan-out

  void validate() const {
    if (total_iterations < 1 || burn_in < 0 || burn_in >= total_iterations) {
      throw ConfigError("need 0 <= burn_in < total_iterations");
    }
    if (block_refresh < 1 || adapt_interval < 1 || latent_thin < 1) {
      throw ConfigError("refresh, adapt, and thin intervals must be positive");
    }
    if (chains < 1) throw ConfigError("chains must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
  }
};

struct ChainInit {
  ParameterVector params;
  LatentState state;
  Vec5 phi;
};

struct ChainOutput {
  Eigen::MatrixXd params;      // total_iterations x 11, every iteration
  Eigen::MatrixXd precisions;  // total_iterations x 5
  // Latent anchor samples per stock: rows = stored post-burn-in iterations.
  std::array<Eigen::MatrixXd, kNumStocks> latents;
  std::vector<int> latent_iterations;
  ParameterVector accept_rate;  // post-burn-in, per parameter
  std::uint64_t seed = 0;
  int burn_in = 0;

  Eigen::MatrixXd post_params() const {
    return params.bottomRows(params.rows() - burn_in);
  }
  Eigen::MatrixXd post_precisions() const {
    return precisions.bottomRows(precisions.rows() - burn_in);
  }
};

// Free-standing full-conditional samplers. Effective window precisions are
// phi/w in exact coarsening mode and the free pooled precision otherwise;
// callers pass them pre-divided. Observation terms arrive pre-multiplied by
// the clone count: obs_precision = r * m * tau, obs_value_sum = r * tau * sum.
double gibbs_latent_interior(Rng& rng, double pred_mean_left, double phi_left,
                             double a_right, double b_right, double next_value,
                             double phi_right, double obs_precision,
                             double obs_value_sum);

double gibbs_latent_initial(Rng& rng, double prior_mean, double prior_precision,
                            double a_right, double b_right, double next_value,
                            double phi_right, double obs_precision,
                            double obs_value_sum);

double gibbs_latent_final(Rng& rng, double pred_mean_left, double phi_left,
                          double obs_precision, double obs_value_sum);

// Conjugate Gamma draw for a process precision under the Jeffreys prior:
// shape n_windows / 2, rate floored for degenerate zero-residual states.
double gibbs_precision(Rng& rng, int n_windows, double rate);

// Parameter blocks from the empirical correlation of a sample window: any
// pair with |rho| > threshold lands in one block (transitively).
std::vector<std::vector<int>> correlation_blocks(const Eigen::MatrixXd& samples,
                                                 double threshold);

// Truncated-normal block proposal: coordinates are proposed sequentially with
// conditional means from the Cholesky factor, each truncated to its bounds.
// Both directions of the proposal density are computable, giving an exact
// Hastings correction.
struct BlockProposal {
  std::vector<int> idx;
  Eigen::MatrixXd chol;  // lower-triangular, already scaled
};

double propose_block_tn(Rng& rng, const BlockProposal& block,
                        const ParameterVector& current,
                        const ParameterVector& lower,
                        const ParameterVector& upper, ParameterVector* proposed);

double block_tn_logpdf(const BlockProposal& block, const ParameterVector& from,
                       const ParameterVector& to, const ParameterVector& lower,
                       const ParameterVector& upper);

ChainOutput run_mcmc(const MCMCConfig& config, const PriorSpec& priors,
                     const DriverSeries& drivers, const ObservationSet& obs,
                     const ChainInit& init, const AcmConfig& acm,
                     PrecisionMode mode, double c_root_frac = 0.3);

// Runs config.chains chains with seeds derived from config.seed and one init
// per chain (dispersed starts are the caller's choice).
std::vector<ChainOutput> run_chains(const MCMCConfig& config,
                                    const PriorSpec& priors,
                                    const DriverSeries& drivers,
                                    const ObservationSet& obs,
                                    const std::vector<ChainInit>& inits,
                                    const AcmConfig& acm, PrecisionMode mode,
                                    double c_root_frac = 0.3);

}  // namespace cssm

#endif  // CSSM_SAMPLER_HPP
