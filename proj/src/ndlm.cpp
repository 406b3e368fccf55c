#include "cssm/ndlm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cssm {

void LatentGrid::validate(int horizon) const {
  if (anchor_times.size() < 2) {
    throw ConfigError("latent grid needs at least the two endpoint anchors");
  }
  if (anchor_times.front() != 0) {
    throw ConfigError("latent grid must start at time 0");
  }
  if (anchor_times.back() != horizon) {
    throw ConfigError("latent grid must end at the horizon (" +
                      std::to_string(horizon) + "), got " +
                      std::to_string(anchor_times.back()));
  }
  for (std::size_t i = 1; i < anchor_times.size(); ++i) {
    if (anchor_times[i] <= anchor_times[i - 1]) {
      throw ConfigError("latent grid anchors must be strictly increasing");
    }
  }
}

bool LatentGrid::is_daily(int horizon) const {
  return static_cast<int>(anchor_times.size()) == horizon + 1;
}

LatentGrid daily_grid(int horizon) {
  LatentGrid g;
  g.anchor_times.resize(horizon + 1);
  for (int t = 0; t <= horizon; ++t) g.anchor_times[t] = t;
  return g;
}

static LatentGrid finalize_grid(std::vector<int> times, int horizon) {
  times.push_back(0);
  times.push_back(horizon);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  for (int t : times) {
    if (t < 0 || t > horizon) {
      throw ConfigError("latent grid anchor " + std::to_string(t) +
                        " outside 0.." + std::to_string(horizon));
    }
  }
  LatentGrid g;
  g.anchor_times = std::move(times);
  g.validate(horizon);
  return g;
}

LatentGrid stepped_grid(int horizon, int step, const std::vector<int>& extra) {
  if (step < 1) throw ConfigError("latent grid step must be >= 1 day");
  std::vector<int> times = extra;
  for (int t = 0; t <= horizon; t += step) times.push_back(t);
  return finalize_grid(std::move(times), horizon);
}

LatentGrid explicit_grid(std::vector<int> times, int horizon,
                         const std::vector<int>& extra) {
  times.insert(times.end(), extra.begin(), extra.end());
  return finalize_grid(std::move(times), horizon);
}

AffineTransition affine_coefficients(Stock stock, const ParameterVector& params,
                                     const DriverRecord& driver,
                                     const Vec5& other_stocks, double gpp_value,
                                     double phi) {
  // Derive (a, b) from the full linear update so the univariate form can
  // never drift out of sync with the 5-dimensional model.
  const Transition5 full = transition_matrix(params, driver, gpp_value);
  const int s = static_cast<int>(stock);
  double b = full.input(s);
  for (int j = 0; j < kNumStocks; ++j) {
    if (j != s) b += full.mult(s, j) * other_stocks(j);
  }
  return {full.mult(s, s), b, phi};
}

WindowTransition compose_window(const std::vector<AffineTransition>& steps) {
  if (steps.empty()) throw ConfigError("compose_window: empty step list");
  WindowTransition out;
  out.a = 1.0;
  out.b = 0.0;
  out.w = 0.0;
  for (const AffineTransition& s : steps) {
    out.a *= s.a;
    out.b = s.a * out.b + s.b;
    out.w = s.a * s.a * out.w + 1.0;
  }
  return out;
}

WindowTransition chain_windows(const WindowTransition& first,
                               const WindowTransition& then) {
  WindowTransition out;
  out.a = then.a * first.a;
  out.b = then.a * first.b + then.b;
  out.w = then.a * then.a * first.w + then.w;
  return out;
}

AffineTransition compose_transition(const std::vector<AffineTransition>& steps) {
  if (steps.empty()) throw ConfigError("compose_transition: empty step list");
  const double phi0 = steps.front().phi;
  for (const AffineTransition& s : steps) {
    if (std::abs(s.phi - phi0) > 1e-9 * std::max(std::abs(phi0), 1.0)) {
      throw ConfigError("compose_transition: steps must share one precision");
    }
  }
  const WindowTransition w = compose_window(steps);
  return {w.a, w.b, phi0 / w.w};
}

std::vector<AffineTransition> coarsen(const std::vector<AffineTransition>& daily,
                                      const LatentGrid& grid, PrecisionMode mode,
                                      double pooled_phi) {
  const int horizon = static_cast<int>(daily.size());
  grid.validate(horizon);
  std::vector<AffineTransition> out;
  out.reserve(grid.num_windows());
  std::vector<AffineTransition> window;
  for (int k = 0; k + 1 < static_cast<int>(grid.anchor_times.size()); ++k) {
    const int t0 = grid.anchor_times[k];
    const int t1 = grid.anchor_times[k + 1];
    window.assign(daily.begin() + t0, daily.begin() + t1);
    if (mode == PrecisionMode::kExact) {
      out.push_back(compose_transition(window));
    } else {
      const WindowTransition w = compose_window(window);
      out.push_back({w.a, w.b, pooled_phi});
    }
  }
  return out;
}

}  // namespace cssm
