#include "cssm/init.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "cssm/dalec.hpp"

namespace cssm {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double logsumexp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

int stable_argmax(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

// Average duplicate times so the GP kernel matrix stays invertible.
std::vector<ObsPoint> dedupe_obs(const std::vector<ObsPoint>& obs) {
  std::vector<ObsPoint> sorted = obs;
  std::sort(sorted.begin(), sorted.end(),
            [](const ObsPoint& a, const ObsPoint& b) { return a.t < b.t; });
  std::vector<ObsPoint> merged;
  for (const auto& point : sorted) {
    if (!merged.empty() && merged.back().t == point.t) {
      merged.back().value = 0.5 * (merged.back().value + point.value);
    } else {
      merged.push_back(point);
    }
  }
  return merged;
}

double gp_log_marginal(const std::vector<ObsPoint>& obs, double signal_var,
                       double length_scale, double nugget_var) {
  const int n = static_cast<int>(obs.size());
  Eigen::VectorXd y(n);
  Eigen::MatrixXd k(n, n);
  const double mean =
      std::accumulate(obs.begin(), obs.end(), 0.0,
                      [](double acc, const ObsPoint& p) { return acc + p.value; }) /
      n;
  for (int i = 0; i < n; ++i) {
    y[i] = obs[static_cast<std::size_t>(i)].value - mean;
    for (int j = 0; j < n; ++j) {
      const double d = obs[static_cast<std::size_t>(i)].t -
                       obs[static_cast<std::size_t>(j)].t;
      k(i, j) = signal_var * std::exp(-0.5 * d * d / (length_scale * length_scale));
    }
    k(i, i) += nugget_var;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha = llt.solve(y);
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixL()(i, i));
  return -0.5 * y.dot(alpha) - logdet - 0.5 * n * kLog2Pi;
}

}  // namespace

void InitStrategy::validate() const {
  if (n_particles < 10) throw ConfigError("init: n_particles must be >= 10");
  if (lhs_size < kNumParams) {
    throw ConfigError("init: lhs_size must be >= the parameter count");
  }
  if (!(pf_precision_frac > 0.0 && pf_precision_frac < 1.0)) {
    throw ConfigError("init: pf_precision_frac must lie in (0, 1)");
  }
  if (gap_threshold_days < 1) {
    throw ConfigError("init: gap_threshold_days must be positive");
  }
}

InitStrategy::Mode parse_init_mode(const std::string& name) {
  if (name == "auto") return InitStrategy::Mode::kAuto;
  if (name == "gp") return InitStrategy::Mode::kGp;
  if (name == "particle_filter") return InitStrategy::Mode::kParticleFilter;
  if (name == "truth_debug") return InitStrategy::Mode::kTruthDebug;
  throw ConfigError("unknown init mode '" + name +
                    "' (auto|gp|particle_filter|truth_debug)");
}

std::string init_mode_name(InitStrategy::Mode mode) {
  switch (mode) {
    case InitStrategy::Mode::kAuto: return "auto";
    case InitStrategy::Mode::kGp: return "gp";
    case InitStrategy::Mode::kParticleFilter: return "particle_filter";
    case InitStrategy::Mode::kTruthDebug: return "truth_debug";
  }
  return "auto";
}

std::vector<double> gp_interpolate(const std::vector<ObsPoint>& obs,
                                   const std::vector<int>& times) {
  const std::vector<ObsPoint> points = dedupe_obs(obs);
  const int n = static_cast<int>(points.size());
  if (n < 2) throw ConfigError("gp_interpolate needs at least two observations");

  double mean = 0.0;
  for (const auto& p : points) mean += p.value;
  mean /= n;
  double var = 0.0;
  for (const auto& p : points) var += (p.value - mean) * (p.value - mean);
  var = std::max(var / std::max(1, n - 1), 1e-12);

  double min_gap = std::numeric_limits<double>::infinity();
  for (int i = 1; i < n; ++i) {
    min_gap = std::min(
        min_gap, static_cast<double>(points[static_cast<std::size_t>(i)].t -
                                     points[static_cast<std::size_t>(i - 1)].t));
  }
  const double span = points.back().t - points.front().t;

  // Hyperparameter grid search on a subsample keeps the fit O(128^3).
  std::vector<ObsPoint> fit_points = points;
  if (n > 128) {
    fit_points.clear();
    for (int i = 0; i < 128; ++i) {
      fit_points.push_back(
          points[static_cast<std::size_t>(i * (n - 1) / 127)]);
    }
    fit_points = dedupe_obs(fit_points);
  }

  std::vector<double> scales;
  const double lo = std::max(min_gap, 1.0);
  const double hi = std::max(2.0 * span, lo * 2.0);
  for (int i = 0; i < 8; ++i) {
    scales.push_back(lo * std::pow(hi / lo, i / 7.0));
  }
  const std::vector<double> nugget_fracs = {1e-6, 1e-4, 1e-2, 1e-1};

  double best_lml = -std::numeric_limits<double>::infinity();
  double best_scale = scales.front();
  double best_nugget = nugget_fracs.front() * var;
  for (double scale : scales) {
    for (double frac : nugget_fracs) {
      const double lml = gp_log_marginal(fit_points, var, scale, frac * var);
      if (lml > best_lml) {
        best_lml = lml;
        best_scale = scale;
        best_nugget = frac * var;
      }
    }
  }

  Eigen::VectorXd y(n);
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    y[i] = points[static_cast<std::size_t>(i)].value - mean;
    for (int j = 0; j < n; ++j) {
      const double d = points[static_cast<std::size_t>(i)].t -
                       points[static_cast<std::size_t>(j)].t;
      k(i, j) = var * std::exp(-0.5 * d * d / (best_scale * best_scale));
    }
    k(i, i) += best_nugget;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    throw NumericError("gp_interpolate: kernel matrix not positive definite");
  }
  const Eigen::VectorXd alpha = llt.solve(y);

  std::vector<double> result;
  result.reserve(times.size());
  for (int t : times) {
    double acc = mean;
    for (int i = 0; i < n; ++i) {
      const double d = t - points[static_cast<std::size_t>(i)].t;
      acc += alpha[i] * var *
             std::exp(-0.5 * d * d / (best_scale * best_scale));
    }
    result.push_back(acc);
  }
  return result;
}

std::vector<ParameterVector> lhs_sample(const ParameterVector& lower,
                                        const ParameterVector& upper, int n,
                                        Rng& rng) {
  if (n < 1) throw ConfigError("lhs_sample needs n >= 1");
  std::vector<ParameterVector> points(static_cast<std::size_t>(n),
                                      ParameterVector::Zero());
  std::vector<int> bins(static_cast<std::size_t>(n));
  for (int p = 0; p < kNumParams; ++p) {
    std::iota(bins.begin(), bins.end(), 0);
    std::shuffle(bins.begin(), bins.end(), rng);
    const double width = upper[p] - lower[p];
    for (int i = 0; i < n; ++i) {
      const double u = draw_uniform(rng);
      points[static_cast<std::size_t>(i)][p] =
          lower[p] + (bins[static_cast<std::size_t>(i)] + u) / n * width;
    }
  }
  return points;
}

PfResult bootstrap_pf(const ParameterVector& params, const ObservationSet& data,
                      const DriverSeries& drivers, const PriorSpec& priors,
                      const InitStrategy& strategy, const AcmConfig& acm,
                      std::uint64_t seed, double c_root_frac) {
  strategy.validate();
  const int horizon = drivers.horizon();
  if (data.horizon > horizon) {
    throw ConfigError("bootstrap_pf: observations extend beyond the drivers");
  }
  const int n = strategy.n_particles;
  Rng rng(seed);

  std::vector<double> gpp_day(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (int t = 1; t <= horizon; ++t) {
    gpp_day[static_cast<std::size_t>(t)] =
        gpp(drivers.at_day(t), params[kNitrogenUse], acm);
  }

  // Observation lookups by day.
  std::vector<std::vector<std::pair<int, double>>> stock_at(
      static_cast<std::size_t>(horizon) + 1);
  for (int s = 0; s < kNumStocks; ++s) {
    for (const auto& point : data.stock_obs[s]) {
      stock_at[static_cast<std::size_t>(point.t)].emplace_back(s, point.value);
    }
  }
  std::vector<std::vector<std::pair<int, double>>> flux_at(
      static_cast<std::size_t>(horizon) + 1);
  for (int j = 0; j < kNumFluxes; ++j) {
    if (!mask_includes(data.flux_mask, static_cast<FluxKind>(j))) continue;
    for (const auto& point : data.flux_obs[j]) {
      flux_at[static_cast<std::size_t>(point.t)].emplace_back(j, point.value);
    }
  }

  const Vec5 mu0 = priors.init_mean;
  Vec5 sd0;
  Vec5 sd_pf;
  for (int s = 0; s < kNumStocks; ++s) {
    sd0[s] = 1.0 / std::sqrt(priors.init_precision[s]);
    sd_pf[s] = strategy.pf_precision_frac * mu0[s];
  }

  // states[t] holds every particle at day t; anc[t] the index each one was
  // propagated from, so the winning path is recovered by backtracking.
  std::vector<Eigen::MatrixXd> states(static_cast<std::size_t>(horizon) + 1);
  std::vector<std::vector<int>> anc(static_cast<std::size_t>(horizon) + 1);

  states[0].resize(n, kNumStocks);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < kNumStocks; ++s) {
      states[0](i, s) = mu0[s] + sd0[s] * draw_normal(rng, 0.0, 1.0);
    }
  }

  Eigen::VectorXd log_w = Eigen::VectorXd::Constant(n, -std::log(n));
  double lml = 0.0;
  std::vector<int> pending_resample;  // applied at the next propagation

  auto weigh = [&](int t) {
    const auto& stock_points = stock_at[static_cast<std::size_t>(t)];
    const auto& flux_points = flux_at[static_cast<std::size_t>(t)];
    if (stock_points.empty() && flux_points.empty()) return;

    for (int i = 0; i < n; ++i) {
      double lp = 0.0;
      for (const auto& [s, y] : stock_points) {
        const double z = y - states[static_cast<std::size_t>(t)](i, s);
        lp += 0.5 * (std::log(data.tau[s]) - kLog2Pi) -
              0.5 * data.tau[s] * z * z;
      }
      if (!flux_points.empty()) {
        Vec5 stocks = states[static_cast<std::size_t>(t)].row(i);
        const FluxSet f =
            compute_fluxes(stocks, drivers.at_day(t), params, c_root_frac,
                           gpp_day[static_cast<std::size_t>(t)]);
        for (const auto& [j, y] : flux_points) {
          const double z = y - flux_value(f, static_cast<FluxKind>(j));
          const double delta = data.delta[static_cast<std::size_t>(j)];
          lp += 0.5 * (std::log(delta) - kLog2Pi) - 0.5 * delta * z * z;
        }
      }
      log_w[i] += lp;
    }

    const double m = logsumexp(log_w);
    if (!std::isfinite(m)) {
      throw NumericError(
          "bootstrap_pf: all particle weights vanished at day " +
          std::to_string(t) + "; observations are impossibly far");
    }
    lml += m;
    log_w.array() -= m;

    if (t == horizon) return;  // no further propagation to resample for
    const double ess_particles = std::exp(-logsumexp(2.0 * log_w));
    if (ess_particles < 0.5 * n) {
      Eigen::VectorXd cdf(n);
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += std::exp(log_w[i]);
        cdf[i] = acc;
      }
      cdf[n - 1] = 1.0;
      pending_resample.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const double u = draw_uniform(rng);
        const double* pos = std::lower_bound(cdf.data(), cdf.data() + n, u);
        pending_resample[static_cast<std::size_t>(i)] =
            static_cast<int>(pos - cdf.data());
      }
      log_w.setConstant(-std::log(n));
    }
  };

  weigh(0);

  for (int t = 1; t <= horizon; ++t) {
    states[static_cast<std::size_t>(t)].resize(n, kNumStocks);
    anc[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(n));
    const DriverRecord& rec = drivers.at_day(t);
    for (int i = 0; i < n; ++i) {
      const int parent =
          pending_resample.empty() ? i : pending_resample[static_cast<std::size_t>(i)];
      anc[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] = parent;
      Vec5 prev = states[static_cast<std::size_t>(t - 1)].row(parent);
      Vec5 next = step_mean(prev, rec, params,
                            gpp_day[static_cast<std::size_t>(t)]);
      for (int s = 0; s < kNumStocks; ++s) {
        next[s] += sd_pf[s] * draw_normal(rng, 0.0, 1.0);
      }
      states[static_cast<std::size_t>(t)].row(i) = next;
    }
    pending_resample.clear();
    weigh(t);
  }

  PfResult result;
  result.log_marginal = lml;
  result.trajectory.resize(horizon + 1, kNumStocks);
  int idx = stable_argmax(log_w);
  for (int t = horizon; t >= 1; --t) {
    result.trajectory.row(t) = states[static_cast<std::size_t>(t)].row(idx);
    idx = anc[static_cast<std::size_t>(t)][static_cast<std::size_t>(idx)];
  }
  result.trajectory.row(0) = states[0].row(idx);
  return result;
}

namespace {

double median_stock_gap(const ObservationSet& data) {
  std::vector<double> gaps;
  for (int s = 0; s < kNumStocks; ++s) {
    std::vector<int> times;
    for (const auto& point : data.stock_obs[s]) times.push_back(point.t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    for (std::size_t i = 1; i < times.size(); ++i) {
      gaps.push_back(static_cast<double>(times[i] - times[i - 1]));
    }
  }
  if (gaps.empty()) return std::numeric_limits<double>::infinity();
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  return gaps[gaps.size() / 2];
}

}  // namespace

InitResult initialize(const ObservationSet& data, const DriverSeries& drivers,
                      const PriorSpec& priors, const InitStrategy& strategy,
                      const AcmConfig& acm, std::uint64_t seed,
                      const Truth* truth, double c_root_frac) {
  strategy.validate();
  const int horizon = drivers.horizon();

  InitStrategy::Mode mode = strategy.mode;
  if (mode == InitStrategy::Mode::kAuto) {
    mode = median_stock_gap(data) <= strategy.gap_threshold_days
               ? InitStrategy::Mode::kGp
               : InitStrategy::Mode::kParticleFilter;
  }

  InitResult result;
  result.mode_used = init_mode_name(mode);

  if (mode == InitStrategy::Mode::kTruthDebug) {
    if (truth == nullptr) {
      throw ConfigError("initialize: truth_debug mode needs the truth");
    }
    result.params = truth->params;
    result.trajectory = truth->stocks;
    return result;
  }

  if (mode == InitStrategy::Mode::kGp) {
    Rng rng(derive_seed(seed, 7));
    for (int p = 0; p < kNumParams; ++p) {
      result.params[p] =
          priors.lower[p] + draw_uniform(rng) * (priors.upper[p] - priors.lower[p]);
    }
    std::vector<int> times(static_cast<std::size_t>(horizon) + 1);
    std::iota(times.begin(), times.end(), 0);
    result.trajectory.resize(horizon + 1, kNumStocks);
    for (int s = 0; s < kNumStocks; ++s) {
      const auto points = dedupe_obs(data.stock_obs[s]);
      if (points.size() >= 2) {
        const auto values = gp_interpolate(points, times);
        for (int t = 0; t <= horizon; ++t) {
          result.trajectory(t, s) = values[static_cast<std::size_t>(t)];
        }
      } else {
        const double fill =
            points.empty() ? priors.init_mean[s] : points.front().value;
        result.trajectory.col(s).setConstant(fill);
      }
    }
    if (!result.trajectory.allFinite()) {
      throw NumericError("initialize: gp interpolation produced non-finite states");
    }
    return result;
  }

  // Particle filter over an LHS design, scored by marginal likelihood.
  Rng rng(derive_seed(seed, 11));
  const auto candidates =
      lhs_sample(priors.lower, priors.upper, strategy.lhs_size, rng);
  double best_lml = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    PfResult pf;
    try {
      pf = bootstrap_pf(candidates[i], data, drivers, priors, strategy, acm,
                        derive_seed(seed, 100 + i), c_root_frac);
    } catch (const NumericError&) {
      continue;  // weight collapse just removes this candidate
    }
    if (!found || pf.log_marginal > best_lml) {
      found = true;
      best_lml = pf.log_marginal;
      result.params = candidates[i];
      result.trajectory = pf.trajectory;
      result.log_marginal = pf.log_marginal;
    }
  }
  if (!found) {
    throw NumericError(
        "initialize: every particle-filter candidate collapsed; check "
        "observation precisions");
  }
  if (!result.trajectory.allFinite()) {
    throw NumericError("initialize: particle filter produced non-finite states");
  }
  return result;
}

}  // namespace cssm
