#ifndef CSSM_PRIORS_HPP
#define CSSM_PRIORS_HPP

#include "cssm/types.hpp"

namespace cssm {

// Uniform box priors on process parameters, Normal priors on initial stocks,
// Jeffreys (1/phi) priors on process precisions (implicit in the conjugate
// Gamma update, never evaluated directly).
struct PriorSpec {
  ParameterVector lower = param_lower_bounds();
  ParameterVector upper = param_upper_bounds();
  Vec5 init_mean;       // mu0 per stock
  Vec5 init_precision;  // phi0 per stock

  PriorSpec() {
    init_mean << 100.0, 100.0, 9000.0, 500.0, 11000.0;
    for (int s = 0; s < kNumStocks; ++s) {
      const double sd = 0.1 * init_mean[s];
      init_precision[s] = 1.0 / (sd * sd);
    }
  }

  void validate() const {
    for (int i = 0; i < kNumParams; ++i) {
      if (!(lower[i] < upper[i])) {
        throw ConfigError("prior bounds must satisfy lower < upper");
      }
    }
    for (int s = 0; s < kNumStocks; ++s) {
      if (!(init_precision[s] > 0.0)) {
        throw ConfigError("initial-state prior precision must be positive");
      }
    }
  }
};

}  // namespace cssm

#endif  // CSSM_PRIORS_HPP
