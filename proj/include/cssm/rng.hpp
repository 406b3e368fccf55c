#ifndef CSSM_RNG_HPP
#define CSSM_RNG_HPP

#include <cstdint>
#include <random>

namespace cssm {

using Rng = std::mt19937_64;

// Cheap mixer for deriving independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x51ed2701ab0e1234ULL));
}

inline double draw_uniform(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double draw_normal(Rng& rng, double mean, double sd) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

// Gamma with the rate parameterization (mean = shape / rate).
inline double draw_gamma_rate(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

double norm_cdf(double z);
double norm_quantile(double p);
double norm_logpdf_std(double z);  // log phi(z) for standard normal

// Normal(mean, sd) truncated to [lo, hi], sampled by inverse CDF. Assumes a
// non-degenerate overlap, which holds whenever mean lies inside [lo, hi].
double draw_trunc_normal(Rng& rng, double mean, double sd, double lo, double hi);

// log of the truncation mass P(lo < N(mean, sd) < hi).
double trunc_normal_log_mass(double mean, double sd, double lo, double hi);

}  // namespace cssm

#endif  // CSSM_RNG_HPP
