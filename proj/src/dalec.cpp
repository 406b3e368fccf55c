#include "cssm/dalec.hpp"

#include <cmath>

namespace cssm {

FluxSet compute_fluxes(const Vec5& stocks, const DriverRecord& driver,
                       const ParameterVector& p, double c_root_frac,
                       double gpp_value) {
  const double q = temp_rate(p, driver.t_mean);
  const double g = gpp_value;
  const double npp = g * (1.0 - p[kGppRespFrac]);

  FluxSet f;
  f.gpp = g;
  f.ra = g * p[kGppRespFrac];
  f.af = npp * p[kNppFoliageFrac];
  f.ar = npp * (1.0 - p[kNppFoliageFrac]) * p[kNppRootFrac];
  f.aw = npp * (1.0 - p[kNppFoliageFrac]) * (1.0 - p[kNppRootFrac]);
  f.lf = p[kFoliageTurnover] * stocks[kFoliage];
  f.lw = p[kWoodTurnover] * stocks[kWood];
  f.lr = p[kRootTurnover] * stocks[kRoots];
  f.r_lit = 0.5 * q * p[kDecompRate] * p[kLitterMinRate] * stocks[kLitter];
  f.r_som = 0.5 * q * p[kSomMinRate] * stocks[kSom];
  f.d_lit = 0.5 * q * p[kDecompRate] * (1.0 - p[kLitterMinRate]) * stocks[kLitter];
  f.nee = f.r_lit + f.r_som - npp;
  f.sr = f.r_lit + f.r_som - c_root_frac * f.ra;
  return f;
}

Vec5 step_mean(const Vec5& c, const DriverRecord& driver,
               const ParameterVector& p, double gpp_value) {
  const double q = temp_rate(p, driver.t_mean);
  const double npp = gpp_value * (1.0 - p[kGppRespFrac]);

  Vec5 out;
  out[kFoliage] = c[kFoliage] - p[kFoliageTurnover] * c[kFoliage] +
                  npp * p[kNppFoliageFrac];
  out[kRoots] = c[kRoots] - p[kRootTurnover] * c[kRoots] +
                npp * (1.0 - p[kNppFoliageFrac]) * p[kNppRootFrac];
  out[kWood] = c[kWood] - p[kWoodTurnover] * c[kWood] +
               npp * (1.0 - p[kNppFoliageFrac]) * (1.0 - p[kNppRootFrac]);
  // Litter loses respiration plus decomposition: (p1/2) Q in total.
  out[kLitter] = c[kLitter] - 0.5 * q * p[kDecompRate] * c[kLitter] +
                 p[kFoliageTurnover] * c[kFoliage] +
                 p[kRootTurnover] * c[kRoots];
  out[kSom] = c[kSom] - 0.5 * q * p[kSomMinRate] * c[kSom] +
              0.5 * q * p[kDecompRate] * (1.0 - p[kLitterMinRate]) * c[kLitter] +
              p[kWoodTurnover] * c[kWood];
  return out;
}

Transition5 transition_matrix(const ParameterVector& p,
                              const DriverRecord& driver, double gpp_value) {
  const double q = temp_rate(p, driver.t_mean);
  const double npp_frac = 1.0 - p[kGppRespFrac];

  Transition5 tr;
  tr.mult.setZero();
  tr.mult(kFoliage, kFoliage) = 1.0 - p[kFoliageTurnover];
  tr.mult(kRoots, kRoots) = 1.0 - p[kRootTurnover];
  tr.mult(kWood, kWood) = 1.0 - p[kWoodTurnover];
  tr.mult(kLitter, kFoliage) = p[kFoliageTurnover];
  tr.mult(kLitter, kRoots) = p[kRootTurnover];
  tr.mult(kLitter, kLitter) = 1.0 - 0.5 * q * p[kDecompRate];
  tr.mult(kSom, kLitter) = 0.5 * q * p[kDecompRate] * (1.0 - p[kLitterMinRate]);
  tr.mult(kSom, kWood) = p[kWoodTurnover];
  tr.mult(kSom, kSom) = 1.0 - 0.5 * q * p[kSomMinRate];

  tr.input.setZero();
  tr.input[kFoliage] = gpp_value * npp_frac * p[kNppFoliageFrac];
  tr.input[kRoots] =
      gpp_value * npp_frac * (1.0 - p[kNppFoliageFrac]) * p[kNppRootFrac];
  tr.input[kWood] = gpp_value * npp_frac * (1.0 - p[kNppFoliageFrac]) *
                    (1.0 - p[kNppRootFrac]);
  return tr;
}

}  // namespace cssm
