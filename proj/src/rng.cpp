#include "cssm/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cssm {

double norm_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double norm_logpdf_std(double z) {
  static const double kLogSqrt2Pi = 0.9189385332046727;
  return -0.5 * z * z - kLogSqrt2Pi;
}

// Inverse standard normal CDF: Acklam's rational approximation followed by a
// single Halley refinement, which brings it to near machine precision.
double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::domain_error("norm_quantile: p outside [0, 1]");
  }

  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};

  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley step on f(x) = Phi(x) - p.
  double e = norm_cdf(x) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

double draw_trunc_normal(Rng& rng, double mean, double sd, double lo, double hi) {
  if (!(sd > 0.0)) throw std::domain_error("draw_trunc_normal: sd must be positive");
  if (!(lo < hi)) throw std::domain_error("draw_trunc_normal: empty interval");
  double zlo = (lo - mean) / sd;
  double zhi = (hi - mean) / sd;
  double plo = norm_cdf(zlo);
  double phi = norm_cdf(zhi);
  if (!(phi > plo)) {
    // Numerically empty overlap; fall back to the nearer endpoint.
    return (zlo > 0.0) ? lo : hi;
  }
  double u = draw_uniform(rng);
  double p = plo + u * (phi - plo);
  // Guard against u rounding to the exact endpoints.
  p = std::min(std::max(p, std::numeric_limits<double>::min()),
               1.0 - std::numeric_limits<double>::epsilon() / 2);
  double z = norm_quantile(p);
  double x = mean + sd * z;
  return std::min(std::max(x, lo), hi);
}

double trunc_normal_log_mass(double mean, double sd, double lo, double hi) {
  double zlo = (lo - mean) / sd;
  double zhi = (hi - mean) / sd;
  double mass = norm_cdf(zhi) - norm_cdf(zlo);
  if (mass <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(mass);
}

}  // namespace cssm
