#include "cssm/acm.hpp"

#include <algorithm>
#include <cmath>

namespace cssm {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Hours of daylight from day-of-year and latitude.
double day_length_hours(int day_of_year, double lat_deg) {
  const double declination =
      -23.4 * std::cos(2.0 * kPi * (day_of_year + 10.0) / 365.0) * kPi / 180.0;
  const double lat = lat_deg * kPi / 180.0;
  double x = -std::tan(lat) * std::tan(declination);
  x = std::clamp(x, -1.0, 1.0);
  return 24.0 * std::acos(x) / kPi;
}
}  // namespace

double gpp(const DriverRecord& driver, double p11, const AcmConfig& config) {
  if (config.mode == GppMode::kOverride) {
    if (!driver.gpp_override.has_value()) {
      throw ConfigError("gpp override mode requires a gpp column for day " +
                        std::to_string(driver.day));
    }
    return *driver.gpp_override;
  }

  const double t_range = 0.5 * (driver.t_max - driver.t_min);
  const double gs = std::pow(std::abs(config.psi_d), config.water_potential_exp) /
                    (config.conductance_denom * config.hydraulic_resistance +
                     t_range);
  const double pp = config.lai * config.foliar_n * p11 / gs *
                    std::exp(config.temp_response_rate * driver.t_max);
  const double qq = config.co2_comp_point - config.co2_half_sat;
  const double ca = driver.co2;
  double disc = (ca + qq - pp) * (ca + qq - pp) -
                4.0 * (ca * qq - pp * config.co2_comp_point);
  disc = std::max(disc, 0.0);
  const double ci = 0.5 * (ca + qq - pp + std::sqrt(disc));

  const double lai2 = config.lai * config.lai;
  const double e0 = config.light_response_max * lai2 / (lai2 + config.lai_half_sat);

  const double co2_grad = ca - ci;
  const double denom = e0 * driver.radiation + gs * co2_grad;
  if (denom <= 0.0) return 0.0;
  const double cps = e0 * driver.radiation * gs * co2_grad / denom;

  const int doy = ((driver.day - 1) % 365) + 1;
  const double dayl = day_length_hours(doy, config.lat_deg);
  const double out =
      cps * (config.day_length_slope * dayl + config.day_length_intercept);
  return std::max(out, 0.0);
}

}  // namespace cssm
