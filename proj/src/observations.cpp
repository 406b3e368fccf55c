#include "cssm/observations.hpp"

#include <algorithm>
#include <cmath>

namespace cssm {

double flux_value(const FluxSet& f, FluxKind kind) {
  switch (kind) {
    case kFluxGpp: return f.gpp;
    case kFluxRa: return f.ra;
    case kFluxAf: return f.af;
    case kFluxAr: return f.ar;
    case kFluxAw: return f.aw;
    case kFluxLf: return f.lf;
    case kFluxLw: return f.lw;
    case kFluxLr: return f.lr;
    case kFluxRlit: return f.r_lit;
    case kFluxRsom: return f.r_som;
    case kFluxDlit: return f.d_lit;
    case kFluxNee: return f.nee;
    case kFluxSr: return f.sr;
  }
  throw ConfigError("unknown flux kind");
}

bool mask_includes(FluxMask mask, FluxKind kind) {
  switch (mask) {
    case FluxMask::kAll:
      return true;
    case FluxMask::kNeonGpp:
      return kind == kFluxNee || kind == kFluxSr || kind == kFluxGpp;
    case FluxMask::kNeonNee:
      return kind == kFluxNee || kind == kFluxSr;
  }
  return false;
}

FluxMask parse_flux_mask(const std::string& name) {
  if (name == "all") return FluxMask::kAll;
  if (name == "neon_gpp") return FluxMask::kNeonGpp;
  if (name == "neon_nee") return FluxMask::kNeonNee;
  throw ConfigError("unknown flux mask '" + name +
                    "' (expected all | neon_gpp | neon_nee)");
}

std::string flux_mask_name(FluxMask mask) {
  switch (mask) {
    case FluxMask::kAll: return "all";
    case FluxMask::kNeonGpp: return "neon_gpp";
    case FluxMask::kNeonNee: return "neon_nee";
  }
  return "all";
}

std::vector<int> ObservationSet::stock_obs_times(int stock) const {
  std::vector<int> times;
  times.reserve(stock_obs[stock].size());
  for (const ObsPoint& p : stock_obs[stock]) times.push_back(p.t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

void ObservationSet::validate() const {
  if (clone_count < 1) throw ConfigError("clone count must be >= 1");
  if (horizon < 1) throw ConfigError("observation horizon must be positive");
  for (int s = 0; s < kNumStocks; ++s) {
    if (!(tau[s] > 0.0)) {
      throw ConfigError("stock observation precision must be positive");
    }
    for (const ObsPoint& p : stock_obs[s]) {
      if (p.t < 0 || p.t > horizon || !std::isfinite(p.value)) {
        throw ConfigError("stock observation outside 0..horizon or non-finite");
      }
    }
  }
  for (int j = 0; j < kNumFluxes; ++j) {
    if (!(delta[j] > 0.0)) {
      throw ConfigError("flux observation precision must be positive");
    }
    for (const ObsPoint& p : flux_obs[j]) {
      if (p.t < 1 || p.t > horizon || !std::isfinite(p.value)) {
        throw ConfigError("flux observation outside 1..horizon or non-finite");
      }
    }
  }
}

ObservationSet clone(const ObservationSet& obs, int r) {
  if (r < 1) throw ConfigError("clone replicate count must be >= 1");
  ObservationSet out = obs;
  out.clone_count = r;
  return out;
}

}  // namespace cssm
