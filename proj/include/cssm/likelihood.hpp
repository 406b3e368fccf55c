#ifndef CSSM_LIKELIHOOD_HPP
#define CSSM_LIKELIHOOD_HPP

#include <array>
#include <vector>

#include "cssm/acm.hpp"
#include "cssm/ndlm.hpp"
#include "cssm/observations.hpp"
#include "cssm/types.hpp"

namespace cssm {

// Latent stocks represented by their values at each stock's grid anchors.
// Days between anchors are deterministic propagations of the process model.
struct LatentState {
  std::array<LatentGrid, kNumStocks> grids;
  std::array<std::vector<double>, kNumStocks> anchors;

  void validate(int horizon) const;  // throws ConfigError
};

struct LikelihoodBreakdown {
  double process_lp = 0.0;
  double stock_obs_lp = 0.0;  // per single copy of the data
  double flux_obs_lp = 0.0;   // per single copy of the data
  std::array<double, kNumStocks> resid_rate{};  // Gamma rate contribution
  std::array<int, kNumStocks> window_count{};

  double data_lp() const { return stock_obs_lp + flux_obs_lp; }
  double total(int clone_count) const {
    return process_lp + clone_count * data_lp();
  }
};

// Composed transition over one inter-anchor window plus the residual of the
// right anchor against its deterministic prediction.
struct WindowEntry {
  double a = 1.0;
  double b = 0.0;
  double w = 1.0;      // variance weight; window precision is phi/w in exact mode
  double resid = 0.0;  // anchors[k+1] - (a * anchors[k] + b)
};

// Shared evaluation engine for the likelihood and the Gibbs sweep. Holds the
// daily coefficient arrays, deterministic fills, and per-window tables for
// one (parameters, anchors) pair; partial rebuilds support the sweep, where
// one stock's anchors change while the tables of other stocks stay valid.
//
// Stocks are processed in dependency order (foliage, roots, wood feed litter;
// litter and wood feed som), which the Stock enum order satisfies.
class PathEngine {
 public:
  PathEngine(const DriverSeries* drivers, const ObservationSet* obs,
             AcmConfig acm, PrecisionMode mode, double c_root_frac = 0.3);

  // Fixes the latent grids and indexes observations against their anchors.
  // Must be called once before refresh(); the grids may not change afterward.
  void bind(const LatentState& state);

  // Full rebuild: coefficients, fills, window tables, observation scores.
  void refresh(const ParameterVector& params, const LatentState& state);

  // Partial rebuilds for the Gibbs sweep.
  void rebuild_coeffs(int stock, const LatentState& state);
  void refill_stock(int stock, const LatentState& state);
  void rescore_data();

  LikelihoodBreakdown breakdown(const Vec5& phi) const;
  double process_lp(const Vec5& phi) const;
  double total(const Vec5& phi, int clone_count) const;

  const std::vector<WindowEntry>& windows(int stock) const {
    return windows_[stock];
  }
  const std::vector<double>& daily(int stock) const { return daily_[stock]; }
  double rate(int stock) const { return rate_[stock]; }
  PrecisionMode mode() const { return mode_; }
  int horizon() const { return horizon_; }

  // Aggregated stock observations at anchor k (count and value sum), for the
  // Gibbs conditionals. Zero count where unobserved.
  int anchor_obs_count(int stock, int k) const {
    return anchor_obs_count_[stock][k];
  }
  double anchor_obs_sum(int stock, int k) const {
    return anchor_obs_sum_[stock][k];
  }

  // True when some stock observation falls between anchors; the likelihood
  // still scores it from the fill, but the Gibbs sweep must reject the setup.
  bool has_non_anchor_stock_obs() const { return non_anchor_obs_ > 0; }

 private:
  void ensure_gpp(const ParameterVector& params);
  void ensure_q(const ParameterVector& params);
  void build_base_coeffs(int stock, const ParameterVector& params);
  void build_windows(int stock, const LatentGrid& grid);

  const DriverSeries* drivers_;
  const ObservationSet* obs_;
  AcmConfig acm_;
  PrecisionMode mode_;
  double c_root_frac_;
  int horizon_;

  std::array<LatentGrid, kNumStocks> grids_;
  bool bound_ = false;

  double gpp_key_, q_key_;
  std::vector<double> gpp_, q_;  // per day, index t-1

  ParameterVector params_;
  std::array<std::vector<double>, kNumStocks> coeff_a_, coeff_b_;  // index t-1
  std::array<std::vector<double>, kNumStocks> daily_;              // index t
  std::array<std::vector<WindowEntry>, kNumStocks> windows_;
  std::array<double, kNumStocks> rate_{}, log_w_sum_{};

  std::array<std::vector<int>, kNumStocks> anchor_obs_count_;
  std::array<std::vector<double>, kNumStocks> anchor_obs_sum_;
  int non_anchor_obs_ = 0;

  struct FluxDayObs {
    int day;
    int series;
    double value;
  };
  std::vector<FluxDayObs> flux_day_obs_;  // masked only, sorted by day
  double stock_norm_ = 0.0, flux_norm_ = 0.0;  // Gaussian normalization sums
  double stock_obs_lp_ = 0.0, flux_obs_lp_ = 0.0;
};

// One-shot joint log-likelihood (process, stock obs, flux obs; cloning folded
// into the total via the breakdown).
LikelihoodBreakdown log_likelihood(const ParameterVector& params,
                                   const Vec5& phi, const LatentState& state,
                                   const ObservationSet& obs,
                                   const DriverSeries& drivers,
                                   const AcmConfig& acm, PrecisionMode mode,
                                   double c_root_frac = 0.3);

}  // namespace cssm

#endif  // CSSM_LIKELIHOOD_HPP
