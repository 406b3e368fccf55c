#ifndef CSSM_OBSERVATIONS_HPP
#define CSSM_OBSERVATIONS_HPP

#include <array>
#include <string>
#include <vector>

#include "cssm/types.hpp"

namespace cssm {

// Observable flux series, in the column order used for CSV output.
enum FluxKind : int {
  kFluxGpp = 0,
  kFluxRa,
  kFluxAf,
  kFluxAr,
  kFluxAw,
  kFluxLf,
  kFluxLw,
  kFluxLr,
  kFluxRlit,
  kFluxRsom,
  kFluxDlit,
  kFluxNee,
  kFluxSr,
};
inline constexpr int kNumFluxes = 13;

inline const std::array<std::string, kNumFluxes>& flux_names() {
  static const std::array<std::string, kNumFluxes> names = {
      "gpp", "ra",   "af",   "ar",   "aw",  "lf", "lw",
      "lr",  "rlit", "rsom", "dlit", "nee", "sr"};
  return names;
}

double flux_value(const FluxSet& f, FluxKind kind);

// Flux-availability scenarios: everything, or the two field-network subsets.
enum class FluxMask {
  kAll,      // every flux series observable
  kNeonGpp,  // net fluxes plus gpp: {nee, sr, gpp}
  kNeonNee,  // net fluxes only: {nee, sr}
};

bool mask_includes(FluxMask mask, FluxKind kind);
FluxMask parse_flux_mask(const std::string& name);  // throws ConfigError
std::string flux_mask_name(FluxMask mask);

struct ObsPoint {
  int t = 0;
  double value = 0.0;
};

// Sparse stock and flux observations with known precisions. Cloning is
// carried as a likelihood multiplier rather than physical duplication.
struct ObservationSet {
  std::array<std::vector<ObsPoint>, kNumStocks> stock_obs;  // t in 0..horizon
  std::array<std::vector<ObsPoint>, kNumFluxes> flux_obs;   // t in 1..horizon
  Vec5 tau = Vec5::Ones();                       // stock observation precisions
  std::array<double, kNumFluxes> delta{};        // flux observation precisions
  FluxMask flux_mask = FluxMask::kAll;
  int clone_count = 1;
  int horizon = 0;

  ObservationSet() { delta.fill(1.0); }

  // Sorted, deduplicated observation times for one stock.
  std::vector<int> stock_obs_times(int stock) const;

  void validate() const;  // throws ConfigError
};

// Same data scored as if duplicated r times.
ObservationSet clone(const ObservationSet& obs, int r);

}  // namespace cssm

#endif  // CSSM_OBSERVATIONS_HPP
