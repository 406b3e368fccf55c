#ifndef CSSM_INIT_HPP
#define CSSM_INIT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cssm/observations.hpp"
#include "cssm/priors.hpp"
#include "cssm/rng.hpp"
#include "cssm/synth.hpp"
#include "cssm/types.hpp"

namespace cssm {

// How the chain start point is produced. kAuto picks kGp when the median
// inter-observation stock gap is at most gap_threshold_days, otherwise the
// particle filter.
struct InitStrategy {
  enum class Mode { kAuto, kGp, kParticleFilter, kTruthDebug };

  Mode mode = Mode::kAuto;
  int n_particles = 1000;
  int lhs_size = 200;
  double pf_precision_frac = 0.1;  // PF process sd as a fraction of mu0
  int gap_threshold_days = 35;

  void validate() const;  // throws ConfigError
};

InitStrategy::Mode parse_init_mode(const std::string& name);
std::string init_mode_name(InitStrategy::Mode mode);

// Posterior-mean interpolation under a squared-exponential kernel with
// nugget; hyperparameters picked by marginal-likelihood grid search. Used
// only to seed chains, so values may leave the data range.
std::vector<double> gp_interpolate(const std::vector<ObsPoint>& obs,
                                   const std::vector<int>& times);

// Latin hypercube sample: each parameter's n draws occupy all n
// equal-probability bins of [lower, upper] exactly once.
std::vector<ParameterVector> lhs_sample(const ParameterVector& lower,
                                        const ParameterVector& upper, int n,
                                        Rng& rng);

struct PfResult {
  Eigen::MatrixXd trajectory;   // (horizon+1) x 5, the best particle's path
  double log_marginal = 0.0;
};

// Bootstrap particle filter: particles start at the initial-condition prior,
// propagate through the daily process mean with process sd
// pf_precision_frac * mu0 per stock, are weighted by the stock and masked
// flux observation densities, and resample (multinomial) when the effective
// particle count drops below n_particles / 2.
PfResult bootstrap_pf(const ParameterVector& params, const ObservationSet& data,
                      const DriverSeries& drivers, const PriorSpec& priors,
                      const InitStrategy& strategy, const AcmConfig& acm,
                      std::uint64_t seed, double c_root_frac = 0.3);

struct InitResult {
  ParameterVector params;
  Eigen::MatrixXd trajectory;  // (horizon+1) x 5 dense daily states
  double log_marginal = 0.0;   // particle-filter score when applicable
  std::string mode_used;
};

// gp mode: GP-interpolated states plus parameters drawn uniform in bounds.
// particle_filter mode: best (params, path) over an LHS design scored by
// bootstrap_pf marginal likelihood (stable argmax by candidate index).
// truth_debug mode: passthrough of the supplied synthetic truth.
InitResult initialize(const ObservationSet& data, const DriverSeries& drivers,
                      const PriorSpec& priors, const InitStrategy& strategy,
                      const AcmConfig& acm, std::uint64_t seed,
                      const Truth* truth = nullptr, double c_root_frac = 0.3);

}  // namespace cssm

#endif  // CSSM_INIT_HPP
