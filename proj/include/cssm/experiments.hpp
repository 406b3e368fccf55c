#ifndef CSSM_EXPERIMENTS_HPP
#define CSSM_EXPERIMENTS_HPP

#include <map>
#include <string>
#include <vector>

#include "cssm/diagnostics.hpp"
#include "cssm/init.hpp"
#include "cssm/sampler.hpp"
#include "cssm/synth.hpp"

namespace cssm {

// Everything one fit needs besides the data: grid choice, coarsening
// precision mode, sampler settings, priors, and initialization strategy.
struct FitSpec {
  std::string latent_step = "daily";  // daily | monthly | annual | explicit:[t1,t2,...]
  PrecisionMode precision_mode = PrecisionMode::kExact;
  MCMCConfig mcmc;
  PriorSpec priors;
  InitStrategy init;
  AcmConfig acm;
  double c_root_frac = 0.3;
};

// Anchor grids per stock for the chosen step, each unioned with that stock's
// observation times (stock observations must sit on anchors).
LatentState build_latent_state(const std::string& latent_step, int horizon,
                               const ObservationSet& obs);

// Anchors read off a dense daily trajectory at each grid's times.
ChainInit make_chain_init(const LatentState& grids,
                          const Eigen::MatrixXd& trajectory,
                          const ParameterVector& params, const Vec5& phi);

struct FitResult {
  LatentState state;  // grids used; anchors as initialized
  std::vector<ChainOutput> chains;
  InitResult init;
};

// Initialization, dispersed chain starts (chain 0 starts at the initializer's
// parameters, later chains redraw parameters uniformly in bounds), and the
// MCMC run. `truth` is only consulted in truth_debug initialization.
FitResult fit_dataset(const ObservationSet& obs, const DriverSeries& drivers,
                      const FitSpec& spec, const Truth* truth = nullptr);

// Mixing score used by the gap and coarsening studies: the mean over stocks
// of log ESS of the post-burn-in precision chains.
double mean_log_ess_precisions(const ChainOutput& chain);

// Per-parameter potential scale reduction over the post-burn-in samples.
ParameterVector rhat_params(const std::vector<ChainOutput>& chains);

struct CoverageScore {
  Vec5 latent_coverage;                     // per stock, over anchor times
  std::array<bool, kNumStocks> phi_covered; // phi_true inside 95% HPD
};

// Scores one chain against the hidden truth it was fit to.
CoverageScore score_coverage(const ChainOutput& chain, const LatentState& state,
                             const Truth& truth, double level = 0.95);

struct CloningOutcome {
  std::vector<int> r_list;
  std::map<int, FitResult> fits_by_r;
  std::array<IdentifiabilityVerdict, kNumParams> verdicts;
};

// Fits the same data at each cloning level and classifies every parameter
// from the pooled post-burn-in samples.
CloningOutcome run_cloning(const ObservationSet& obs, const DriverSeries& drivers,
                           const FitSpec& spec, const std::vector<int>& r_list);

}  // namespace cssm

#endif  // CSSM_EXPERIMENTS_HPP
