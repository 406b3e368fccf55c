#ifndef CSSM_SYNTH_HPP
#define CSSM_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cssm/acm.hpp"
#include "cssm/observations.hpp"
#include "cssm/priors.hpp"
#include "cssm/types.hpp"

namespace cssm {

// Reference parameter values used for all synthetic studies.
ParameterVector study_params();

// Observation-availability scenario for a synthetic study.
struct Scenario {
  std::string stock_frequency = "daily";  // daily | monthly | annual
  FluxMask flux_mask = FluxMask::kAll;
  int horizon_days = 730;
  int replicates = 1;
  std::uint64_t seed = 1;

  int stock_stride() const;  // 1, 30, or 365 days
  void validate() const;
};

// A simulated hidden truth: the noisy stock path and the fluxes along it.
struct Truth {
  Eigen::MatrixXd stocks;       // (horizon+1) x 5
  std::vector<FluxSet> fluxes;  // index t-1 holds the fluxes at day t
  ParameterVector params;
  Vec5 phi_true;
  Vec5 init_stocks;

  int horizon() const { return static_cast<int>(stocks.rows()) - 1; }
};

// Deterministic model run (no process noise) from a fixed initial state.
Eigen::MatrixXd deterministic_path(const Vec5& init, const DriverSeries& drivers,
                                   const ParameterVector& params,
                                   const AcmConfig& acm);

// Initial stocks from the prior, then daily propagation with process noise
// of precision phi_true per stock; fluxes recorded along the noisy path.
Truth simulate_truth(const ParameterVector& params, const DriverSeries& drivers,
                     const PriorSpec& priors, const Vec5& phi_true,
                     const AcmConfig& acm, std::uint64_t seed,
                     double c_root_frac = 0.3);

// Default noise levels. The process sd is 1% and the stock observation sd 2%
// of each stock's initial prior mean; flux observation sd is 10% of the mean
// flux magnitude of the given truth (floored to avoid degenerate precisions).
Vec5 default_phi_true(const PriorSpec& priors);
Vec5 default_tau(const PriorSpec& priors);
std::array<double, kNumFluxes> default_delta(const Truth& truth);

// Noisy observations at the scenario's stock frequency (always including
// t = 0) and daily masked fluxes. Each observation's noise is keyed by
// (seed, series, time), so coarser scenarios are exact subsets of finer ones.
ObservationSet observe(const Truth& truth, const Vec5& tau,
                       const std::array<double, kNumFluxes>& delta,
                       const Scenario& scenario, std::uint64_t seed);

struct Dataset {
  Truth truth;
  ObservationSet obs;
  std::uint64_t seed = 0;
  int replicate = 0;
};

// Independent seeded truth+observation pairs under one scenario.
std::vector<Dataset> generate_study(const Scenario& scenario,
                                    const ParameterVector& params,
                                    const DriverSeries& drivers,
                                    const PriorSpec& priors,
                                    const AcmConfig& acm,
                                    double c_root_frac = 0.3);

// Two-year-style sinusoidal forcing: seasonal temperature and radiation with
// a mild CO2 trend. The bundled driver CSV is exactly this series.
DriverSeries synthetic_drivers(int horizon_days);

}  // namespace cssm

#endif  // CSSM_SYNTH_HPP
