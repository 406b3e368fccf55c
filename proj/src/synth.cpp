#include "cssm/synth.hpp"

#include <cmath>

#include "cssm/dalec.hpp"
#include "cssm/rng.hpp"

namespace cssm {

namespace {
constexpr double kTwoPi = 6.283185307179586;

// One standard-normal draw keyed by (seed, series, time): observation noise
// is identical no matter which scenario requests the observation.
double keyed_std_normal(std::uint64_t seed, int series, int t) {
  Rng rng(derive_seed(derive_seed(seed, 1000 + static_cast<std::uint64_t>(series)),
                      static_cast<std::uint64_t>(t)));
  return draw_normal(rng, 0.0, 1.0);
}
}  // namespace

ParameterVector study_params() {
  ParameterVector p;
  p << 0.002, 0.27, 0.15, 0.33, 0.00137, 1.1e-4, 0.00137, 0.1, 1.096e-5,
      0.1725, 3.0;
  return p;
}

int Scenario::stock_stride() const {
  if (stock_frequency == "daily") return 1;
  if (stock_frequency == "monthly") return 30;
  if (stock_frequency == "annual") return 365;
  throw ConfigError("unknown stock frequency '" + stock_frequency +
                    "' (expected daily | monthly | annual)");
}

void Scenario::validate() const {
  (void)stock_stride();
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (horizon_days < 1) throw ConfigError("horizon must be positive");
  if (stock_frequency == "annual" && horizon_days % 365 != 0) {
    throw ConfigError("annual scenarios need a horizon that is a multiple of 365");
  }
}

Eigen::MatrixXd deterministic_path(const Vec5& init, const DriverSeries& drivers,
                                   const ParameterVector& params,
                                   const AcmConfig& acm) {
  const int horizon = drivers.horizon();
  Eigen::MatrixXd path(horizon + 1, kNumStocks);
  Vec5 c = init;
  path.row(0) = c.transpose();
  for (int t = 1; t <= horizon; ++t) {
    const DriverRecord& d = drivers.at_day(t);
    c = step_mean(c, d, params, gpp(d, params[kNitrogenUse], acm));
    path.row(t) = c.transpose();
  }
  return path;
}

Truth simulate_truth(const ParameterVector& params, const DriverSeries& drivers,
                     const PriorSpec& priors, const Vec5& phi_true,
                     const AcmConfig& acm, std::uint64_t seed,
                     double c_root_frac) {
  const int horizon = drivers.horizon();
  Truth out;
  out.params = params;
  out.phi_true = phi_true;
  out.stocks.resize(horizon + 1, kNumStocks);
  out.fluxes.reserve(horizon);

  Rng rng(seed);
  Vec5 c;
  for (int s = 0; s < kNumStocks; ++s) {
    c[s] = draw_normal(rng, priors.init_mean[s],
                       1.0 / std::sqrt(priors.init_precision[s]));
  }
  out.init_stocks = c;
  out.stocks.row(0) = c.transpose();

  for (int t = 1; t <= horizon; ++t) {
    const DriverRecord& d = drivers.at_day(t);
    const double g = gpp(d, params[kNitrogenUse], acm);
    c = step_mean(c, d, params, g);
    for (int s = 0; s < kNumStocks; ++s) {
      c[s] += draw_normal(rng, 0.0, 1.0 / std::sqrt(phi_true[s]));
    }
    out.stocks.row(t) = c.transpose();
    out.fluxes.push_back(compute_fluxes(c, d, params, c_root_frac, g));
  }
  return out;
}

Vec5 default_phi_true(const PriorSpec& priors) {
  Vec5 phi;
  for (int s = 0; s < kNumStocks; ++s) {
    const double sd = 0.01 * priors.init_mean[s];
    phi[s] = 1.0 / (sd * sd);
  }
  return phi;
}

Vec5 default_tau(const PriorSpec& priors) {
  Vec5 tau;
  for (int s = 0; s < kNumStocks; ++s) {
    const double sd = 0.02 * priors.init_mean[s];
    tau[s] = 1.0 / (sd * sd);
  }
  return tau;
}

std::array<double, kNumFluxes> default_delta(const Truth& truth) {
  std::array<double, kNumFluxes> delta;
  for (int j = 0; j < kNumFluxes; ++j) {
    double mean_abs = 0.0;
    for (const FluxSet& f : truth.fluxes) {
      mean_abs += std::abs(flux_value(f, static_cast<FluxKind>(j)));
    }
    mean_abs /= static_cast<double>(truth.fluxes.size());
    const double sd = 0.1 * std::max(mean_abs, 1e-2);
    delta[j] = 1.0 / (sd * sd);
  }
  return delta;
}

ObservationSet observe(const Truth& truth, const Vec5& tau,
                       const std::array<double, kNumFluxes>& delta,
                       const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  const int horizon = truth.horizon();
  ObservationSet obs;
  obs.horizon = horizon;
  obs.tau = tau;
  obs.delta = delta;
  obs.flux_mask = scenario.flux_mask;

  const int stride = scenario.stock_stride();
  for (int s = 0; s < kNumStocks; ++s) {
    const double sd = 1.0 / std::sqrt(tau[s]);
    for (int t = 0; t <= horizon; t += stride) {
      const double noise = keyed_std_normal(seed, s, t);
      obs.stock_obs[s].push_back({t, truth.stocks(t, s) + sd * noise});
    }
  }
  for (int j = 0; j < kNumFluxes; ++j) {
    if (!mask_includes(scenario.flux_mask, static_cast<FluxKind>(j))) continue;
    const double sd = 1.0 / std::sqrt(delta[j]);
    for (int t = 1; t <= horizon; ++t) {
      const double noise = keyed_std_normal(seed, kNumStocks + j, t);
      const double value =
          flux_value(truth.fluxes[t - 1], static_cast<FluxKind>(j));
      obs.flux_obs[j].push_back({t, value + sd * noise});
    }
  }
  obs.validate();
  return obs;
}

std::vector<Dataset> generate_study(const Scenario& scenario,
                                    const ParameterVector& params,
                                    const DriverSeries& drivers,
                                    const PriorSpec& priors,
                                    const AcmConfig& acm, double c_root_frac) {
  scenario.validate();
  if (drivers.horizon() != scenario.horizon_days) {
    throw ConfigError("driver series does not cover the scenario horizon");
  }
  std::vector<Dataset> datasets;
  datasets.reserve(scenario.replicates);
  const Vec5 phi_true = default_phi_true(priors);
  const Vec5 tau = default_tau(priors);
  for (int i = 0; i < scenario.replicates; ++i) {
    Dataset ds;
    ds.replicate = i;
    ds.seed = derive_seed(scenario.seed, static_cast<std::uint64_t>(i));
    ds.truth = simulate_truth(params, drivers, priors, phi_true, acm,
                              derive_seed(ds.seed, 0), c_root_frac);
    ds.obs = observe(ds.truth, tau, default_delta(ds.truth), scenario,
                     derive_seed(ds.seed, 1));
    datasets.push_back(std::move(ds));
  }
  return datasets;
}

DriverSeries synthetic_drivers(int horizon_days) {
  std::vector<DriverRecord> records;
  records.reserve(horizon_days);
  for (int t = 1; t <= horizon_days; ++t) {
    const int doy = ((t - 1) % 365) + 1;
    DriverRecord d;
    d.day = t;
    // Warm-temperate seasonal cycle: radiation peaks near the solstice,
    // temperature lags it by about a month.
    d.t_mean = 17.0 + 9.0 * std::sin(kTwoPi * (doy - 111) / 365.0);
    d.t_min = d.t_mean - 6.0;
    d.t_max = d.t_mean + 6.0;
    d.radiation =
        std::max(0.5, 12.0 + 8.0 * std::sin(kTwoPi * (doy - 81) / 365.0));
    d.co2 = 412.0 + 2.5 * (static_cast<double>(t) / 365.0) +
            3.0 * std::sin(kTwoPi * (doy - 15) / 365.0);
    records.push_back(d);
  }
  return DriverSeries(std::move(records));
}

}  // namespace cssm
