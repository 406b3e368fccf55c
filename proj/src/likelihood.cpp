#include "cssm/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cssm/dalec.hpp"

namespace cssm {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

void LatentState::validate(int horizon) const {
  for (int s = 0; s < kNumStocks; ++s) {
    grids[s].validate(horizon);
    if (anchors[s].size() != grids[s].anchor_times.size()) {
      throw ConfigError("latent anchors for " + stock_names()[s] +
                        " do not match the grid size");
    }
    for (double v : anchors[s]) {
      if (!std::isfinite(v)) {
        throw ConfigError("non-finite latent anchor for " + stock_names()[s]);
      }
    }
  }
}

PathEngine::PathEngine(const DriverSeries* drivers, const ObservationSet* obs,
                       AcmConfig acm, PrecisionMode mode, double c_root_frac)
    : drivers_(drivers),
      obs_(obs),
      acm_(acm),
      mode_(mode),
      c_root_frac_(c_root_frac),
      horizon_(drivers->horizon()),
      gpp_key_(std::numeric_limits<double>::quiet_NaN()),
      q_key_(std::numeric_limits<double>::quiet_NaN()) {
  if (horizon_ < 1) throw ConfigError("driver series is empty");
  if (obs_->horizon != horizon_) {
    throw ConfigError("observation horizon does not match the driver series");
  }
  gpp_.resize(horizon_);
  q_.resize(horizon_);
  for (int s = 0; s < kNumStocks; ++s) {
    coeff_a_[s].resize(horizon_);
    coeff_b_[s].resize(horizon_);
    daily_[s].resize(horizon_ + 1);
  }
  params_.setConstant(std::numeric_limits<double>::quiet_NaN());
}

void PathEngine::bind(const LatentState& state) {
  state.validate(horizon_);
  non_anchor_obs_ = 0;
  for (int s = 0; s < kNumStocks; ++s) {
    grids_[s] = state.grids[s];
    const std::vector<int>& anchors = grids_[s].anchor_times;
    anchor_obs_count_[s].assign(anchors.size(), 0);
    anchor_obs_sum_[s].assign(anchors.size(), 0.0);
    for (const ObsPoint& p : obs_->stock_obs[s]) {
      const auto it =
          std::lower_bound(anchors.begin(), anchors.end(), p.t);
      if (it != anchors.end() && *it == p.t) {
        const std::size_t k = static_cast<std::size_t>(it - anchors.begin());
        anchor_obs_count_[s][k] += 1;
        anchor_obs_sum_[s][k] += p.value;
      } else {
        ++non_anchor_obs_;
      }
    }
    windows_[s].assign(grids_[s].num_windows(), WindowEntry{});
  }

  flux_day_obs_.clear();
  flux_norm_ = 0.0;
  for (int j = 0; j < kNumFluxes; ++j) {
    if (!mask_includes(obs_->flux_mask, static_cast<FluxKind>(j))) continue;
    const double norm = 0.5 * (std::log(obs_->delta[j]) - kLog2Pi);
    for (const ObsPoint& p : obs_->flux_obs[j]) {
      flux_day_obs_.push_back({p.t, j, p.value});
      flux_norm_ += norm;
    }
  }
  std::stable_sort(flux_day_obs_.begin(), flux_day_obs_.end(),
                   [](const FluxDayObs& x, const FluxDayObs& y) {
                     return x.day < y.day;
                   });

  stock_norm_ = 0.0;
  for (int s = 0; s < kNumStocks; ++s) {
    stock_norm_ += 0.5 * (std::log(obs_->tau[s]) - kLog2Pi) *
                   static_cast<double>(obs_->stock_obs[s].size());
  }
  bound_ = true;
}

void PathEngine::ensure_gpp(const ParameterVector& params) {
  const double key =
      acm_.mode == GppMode::kOverride ? 0.0 : params[kNitrogenUse];
  if (key == gpp_key_) return;
  for (int t = 1; t <= horizon_; ++t) {
    gpp_[t - 1] = gpp(drivers_->at_day(t), params[kNitrogenUse], acm_);
  }
  gpp_key_ = key;
}

void PathEngine::ensure_q(const ParameterVector& params) {
  const double key = params[kTempDependence];
  if (key == q_key_) return;
  for (int t = 1; t <= horizon_; ++t) {
    q_[t - 1] = std::exp(key * drivers_->at_day(t).t_mean);
  }
  q_key_ = key;
}

void PathEngine::build_base_coeffs(int stock, const ParameterVector& p) {
  std::vector<double>& a = coeff_a_[stock];
  std::vector<double>& b = coeff_b_[stock];
  switch (stock) {
    case kFoliage: {
      const double mult = 1.0 - p[kFoliageTurnover];
      const double frac = (1.0 - p[kGppRespFrac]) * p[kNppFoliageFrac];
      for (int i = 0; i < horizon_; ++i) {
        a[i] = mult;
        b[i] = gpp_[i] * frac;
      }
      break;
    }
    case kRoots: {
      const double mult = 1.0 - p[kRootTurnover];
      const double frac = (1.0 - p[kGppRespFrac]) *
                          (1.0 - p[kNppFoliageFrac]) * p[kNppRootFrac];
      for (int i = 0; i < horizon_; ++i) {
        a[i] = mult;
        b[i] = gpp_[i] * frac;
      }
      break;
    }
    case kWood: {
      const double mult = 1.0 - p[kWoodTurnover];
      const double frac = (1.0 - p[kGppRespFrac]) *
                          (1.0 - p[kNppFoliageFrac]) * (1.0 - p[kNppRootFrac]);
      for (int i = 0; i < horizon_; ++i) {
        a[i] = mult;
        b[i] = gpp_[i] * frac;
      }
      break;
    }
    case kLitter: {
      const std::vector<double>& cf = daily_[kFoliage];
      const std::vector<double>& cr = daily_[kRoots];
      for (int i = 0; i < horizon_; ++i) {
        a[i] = 1.0 - 0.5 * q_[i] * p[kDecompRate];
        // Inflow from the feeder stocks at the start of the day.
        b[i] = p[kFoliageTurnover] * cf[i] + p[kRootTurnover] * cr[i];
      }
      break;
    }
    case kSom: {
      const std::vector<double>& clit = daily_[kLitter];
      const std::vector<double>& cw = daily_[kWood];
      const double dfrac = p[kDecompRate] * (1.0 - p[kLitterMinRate]);
      for (int i = 0; i < horizon_; ++i) {
        a[i] = 1.0 - 0.5 * q_[i] * p[kSomMinRate];
        b[i] = 0.5 * q_[i] * dfrac * clit[i] + p[kWoodTurnover] * cw[i];
      }
      break;
    }
    default:
      throw ConfigError("unknown stock index");
  }
}

void PathEngine::build_windows(int stock, const LatentGrid& grid) {
  const std::vector<double>& a = coeff_a_[stock];
  const std::vector<double>& b = coeff_b_[stock];
  std::vector<WindowEntry>& wins = windows_[stock];
  double log_w_sum = 0.0;
  for (int k = 0; k < grid.num_windows(); ++k) {
    const int t0 = grid.anchor_times[k];
    const int t1 = grid.anchor_times[k + 1];
    double A = 1.0, B = 0.0, W = 0.0;
    for (int t = t0 + 1; t <= t1; ++t) {
      const double at = a[t - 1];
      A *= at;
      B = at * B + b[t - 1];
      W = at * at * W + 1.0;
    }
    wins[k].a = A;
    wins[k].b = B;
    wins[k].w = W;
    if (mode_ == PrecisionMode::kExact) log_w_sum += std::log(W);
  }
  log_w_sum_[stock] = (mode_ == PrecisionMode::kExact) ? log_w_sum : 0.0;
}

void PathEngine::rebuild_coeffs(int stock, const LatentState& state) {
  build_base_coeffs(stock, params_);
  build_windows(stock, state.grids[stock]);
}

void PathEngine::refill_stock(int stock, const LatentState& state) {
  const LatentGrid& grid = state.grids[stock];
  const std::vector<double>& anchors = state.anchors[stock];
  const std::vector<double>& a = coeff_a_[stock];
  const std::vector<double>& b = coeff_b_[stock];
  std::vector<double>& day = daily_[stock];
  std::vector<WindowEntry>& wins = windows_[stock];

  day[0] = anchors[0];
  double rate = 0.0;
  for (int k = 0; k < grid.num_windows(); ++k) {
    const int t0 = grid.anchor_times[k];
    const int t1 = grid.anchor_times[k + 1];
    double x = anchors[k];
    for (int t = t0 + 1; t < t1; ++t) {
      x = a[t - 1] * x + b[t - 1];
      day[t] = x;
    }
    day[t1] = anchors[k + 1];
    const double resid = anchors[k + 1] - (wins[k].a * anchors[k] + wins[k].b);
    wins[k].resid = resid;
    rate += (mode_ == PrecisionMode::kExact) ? resid * resid / wins[k].w
                                             : resid * resid;
  }
  rate_[stock] = 0.5 * rate;
}

void PathEngine::rescore_data() {
  double stock_quad = 0.0;
  for (int s = 0; s < kNumStocks; ++s) {
    const std::vector<double>& day = daily_[s];
    double ss = 0.0;
    for (const ObsPoint& p : obs_->stock_obs[s]) {
      const double r = p.value - day[p.t];
      ss += r * r;
    }
    stock_quad += obs_->tau[s] * ss;
  }
  stock_obs_lp_ = stock_norm_ - 0.5 * stock_quad;

  double flux_quad = 0.0;
  Vec5 stocks;
  std::size_t i = 0;
  while (i < flux_day_obs_.size()) {
    const int day = flux_day_obs_[i].day;
    for (int s = 0; s < kNumStocks; ++s) stocks[s] = daily_[s][day];
    const FluxSet f = compute_fluxes(stocks, drivers_->at_day(day), params_,
                                     c_root_frac_, gpp_[day - 1]);
    while (i < flux_day_obs_.size() && flux_day_obs_[i].day == day) {
      const FluxDayObs& o = flux_day_obs_[i];
      const double r = o.value - flux_value(f, static_cast<FluxKind>(o.series));
      flux_quad += obs_->delta[o.series] * r * r;
      ++i;
    }
  }
  flux_obs_lp_ = flux_norm_ - 0.5 * flux_quad;
}

void PathEngine::refresh(const ParameterVector& params, const LatentState& state) {
  if (!bound_) throw ConfigError("PathEngine::refresh before bind");
  params_ = params;
  ensure_gpp(params);
  ensure_q(params);
  for (int s = 0; s < kNumStocks; ++s) {
    // Enum order is dependency order: litter sees fresh foliage/root fills,
    // som sees fresh litter/wood fills.
    build_base_coeffs(s, params);
    build_windows(s, state.grids[s]);
    refill_stock(s, state);
  }
  rescore_data();
}

double PathEngine::process_lp(const Vec5& phi) const {
  double lp = 0.0;
  for (int s = 0; s < kNumStocks; ++s) {
    const double n = static_cast<double>(windows_[s].size());
    lp += 0.5 * n * (std::log(phi[s]) - kLog2Pi) - 0.5 * log_w_sum_[s] -
          phi[s] * rate_[s];
  }
  return lp;
}

LikelihoodBreakdown PathEngine::breakdown(const Vec5& phi) const {
  LikelihoodBreakdown out;
  out.process_lp = process_lp(phi);
  out.stock_obs_lp = stock_obs_lp_;
  out.flux_obs_lp = flux_obs_lp_;
  for (int s = 0; s < kNumStocks; ++s) {
    out.resid_rate[s] = rate_[s];
    out.window_count[s] = static_cast<int>(windows_[s].size());
  }
  return out;
}

double PathEngine::total(const Vec5& phi, int clone_count) const {
  return process_lp(phi) + clone_count * (stock_obs_lp_ + flux_obs_lp_);
}

LikelihoodBreakdown log_likelihood(const ParameterVector& params,
                                   const Vec5& phi, const LatentState& state,
                                   const ObservationSet& obs,
                                   const DriverSeries& drivers,
                                   const AcmConfig& acm, PrecisionMode mode,
                                   double c_root_frac) {
  obs.validate();
  PathEngine engine(&drivers, &obs, acm, mode, c_root_frac);
  engine.bind(state);
  engine.refresh(params, state);
  return engine.breakdown(phi);
}

}  // namespace cssm
