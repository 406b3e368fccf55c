#ifndef CSSM_NDLM_HPP
#define CSSM_NDLM_HPP

#include <vector>

#include "cssm/dalec.hpp"
#include "cssm/types.hpp"

namespace cssm {

// One-step affine-Gaussian transition for a single stock:
//   C_t = a * C_{t-1} + b + eps,  eps ~ N(0, precision phi).
struct AffineTransition {
  double a = 1.0;
  double b = 0.0;
  double phi = 1.0;
};

// Composition of consecutive one-step transitions over a window, with the
// noise scale factored out:  C_end = a * C_start + b + eps,
// Var(eps) = w / phi  where phi is the shared per-step precision.
struct WindowTransition {
  double a = 1.0;
  double b = 0.0;
  double w = 0.0;  // variance accumulation weight; 1 for a single step
};

// Anchor times for one stock's latent states: a subset of {0..T} that always
// contains both endpoints. States are sampled at anchors only; days between
// anchors are marginalized through composed transitions.
struct LatentGrid {
  std::vector<int> anchor_times;
  int base_step_days = 1;

  int num_windows() const { return static_cast<int>(anchor_times.size()) - 1; }
  void validate(int horizon) const;  // throws ConfigError on violation
  bool is_daily(int horizon) const;
};

LatentGrid daily_grid(int horizon);
// Anchors every `step` days starting at 0, plus the horizon and any `extra`
// times (observation times must be anchors for the stock they constrain).
LatentGrid stepped_grid(int horizon, int step, const std::vector<int>& extra = {});
LatentGrid explicit_grid(std::vector<int> times, int horizon,
                         const std::vector<int>& extra = {});

// Per-stock affine form of the one-day update with all other stocks held
// fixed at `other_stocks` (their values at the start of the day). Cross-stock
// inflows fold into b. `phi` is carried through unchanged.
AffineTransition affine_coefficients(Stock stock, const ParameterVector& params,
                                     const DriverRecord& driver,
                                     const Vec5& other_stocks, double gpp_value,
                                     double phi = 1.0);

// Exact forward composition of consecutive steps. All steps must share one
// precision; the composed precision is phi / w with w the variance weight.
WindowTransition compose_window(const std::vector<AffineTransition>& steps);
AffineTransition compose_transition(const std::vector<AffineTransition>& steps);

// Combine two already-composed windows applied in order (first, then).
WindowTransition chain_windows(const WindowTransition& first,
                               const WindowTransition& then);

enum class PrecisionMode {
  kExact,   // composed window precision phi / w, phi the daily-scale precision
  kPooled,  // one free precision per stock applied to every window (w == 1)
};

// Compose daily transitions (daily[i] maps day i to day i+1, i = 0..T-1) into
// one transition per consecutive anchor pair. In pooled mode the composed
// phi is `pooled_phi` for every window regardless of window length.
std::vector<AffineTransition> coarsen(const std::vector<AffineTransition>& daily,
                                      const LatentGrid& grid, PrecisionMode mode,
                                      double pooled_phi = 1.0);

}  // namespace cssm

#endif  // CSSM_NDLM_HPP
