#ifndef CSSM_ACM_HPP
#define CSSM_ACM_HPP

#include "cssm/types.hpp"

namespace cssm {

enum class GppMode { kAcm, kOverride };

// Aggregated canopy model configuration. The coefficient defaults are the
// published daily-aggregation fit used by DALEC implementations; every value
// is overridable because the coefficients come from an external calibration,
// not from first principles.
struct AcmConfig {
  GppMode mode = GppMode::kAcm;

  double lai = 2.0;           // leaf area index, held fixed
  double foliar_n = 2.7;      // average foliar nitrogen, gN m-2
  double lat_deg = 32.95;     // site latitude, degrees
  double psi_d = -2.0;        // max soil-leaf water potential difference, MPa
  double hydraulic_resistance = 1.0;

  double day_length_slope = 0.0156935;
  double co2_comp_point = 4.22273;
  double co2_half_sat = 208.868;
  double day_length_intercept = 0.0453194;
  double conductance_denom = 0.37836;
  double light_response_max = 7.19298;
  double temp_response_rate = 0.011136;
  double lai_half_sat = 2.1001;
  double water_potential_exp = 0.789798;
};

// Daily gross primary production, gC m-2 day-1. In override mode the driver
// must carry a gpp value; in acm mode the canopy model is evaluated with
// nitrogen-use efficiency p11. Result is clamped at zero.
double gpp(const DriverRecord& driver, double p11, const AcmConfig& config);

}  // namespace cssm

#endif  // CSSM_ACM_HPP
