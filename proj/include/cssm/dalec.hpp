#ifndef CSSM_DALEC_HPP
#define CSSM_DALEC_HPP

#include "cssm/acm.hpp"
#include "cssm/types.hpp"

namespace cssm {

// Temperature-dependent rate multiplier exp(p10 * mean temperature).
inline double temp_rate(const ParameterVector& p, double t_mean) {
  return std::exp(p[kTempDependence] * t_mean);
}

// All eleven fluxes plus NEE and soil respiration for one day, evaluated at
// the given stocks and driver. gpp_value is the photosynthetic input G for
// the day (see gpp()); c_root_frac is the root fraction of autotrophic
// respiration counted in soil respiration.
FluxSet compute_fluxes(const Vec5& stocks, const DriverRecord& driver,
                       const ParameterVector& params, double c_root_frac,
                       double gpp_value);

// Expected stocks after one daily step. Litter loses both its respired and
// decomposed fractions, consistent with the flux set and the transition
// matrix.
Vec5 step_mean(const Vec5& stocks, const DriverRecord& driver,
               const ParameterVector& params, double gpp_value);

struct Transition5 {
  Mat5 mult;    // multiplier on the previous state vector
  Vec5 input;   // additive photosynthetic input
};

// One-day stock update in matrix form: E[C_t] = mult * C_{t-1} + input.
Transition5 transition_matrix(const ParameterVector& params,
                              const DriverRecord& driver, double gpp_value);

}  // namespace cssm

#endif  // CSSM_DALEC_HPP
