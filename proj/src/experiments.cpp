#include "cssm/experiments.hpp"

#include <algorithm>
#include <cmath>

namespace cssm {

namespace {

std::vector<int> parse_explicit_times(const std::string& spec) {
  std::vector<int> times;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    try {
      times.push_back(std::stoi(token));
    } catch (const std::exception&) {
      throw ConfigError("bad explicit grid time '" + token + "'");
    }
    token.clear();
  };
  for (char c : spec) {
    if (c == ';' || c == ',' || c == '[' || c == ']' || c == ' ') {
      flush();
    } else {
      token.push_back(c);
    }
  }
  flush();
  return times;
}

}  // namespace

LatentState build_latent_state(const std::string& latent_step, int horizon,
                               const ObservationSet& obs) {
  LatentState state;
  for (int s = 0; s < kNumStocks; ++s) {
    const std::vector<int> extra = obs.stock_obs_times(s);
    if (latent_step == "daily") {
      state.grids[s] = daily_grid(horizon);
    } else if (latent_step == "monthly") {
      state.grids[s] = stepped_grid(horizon, 30, extra);
    } else if (latent_step == "annual") {
      state.grids[s] = stepped_grid(horizon, 365, extra);
    } else if (latent_step.rfind("explicit:", 0) == 0) {
      state.grids[s] = explicit_grid(
          parse_explicit_times(latent_step.substr(9)), horizon, extra);
    } else {
      throw ConfigError("unknown latent_step '" + latent_step +
                        "' (daily|monthly|annual|explicit:[t1,t2,...])");
    }
    state.anchors[s].assign(state.grids[s].anchor_times.size(), 0.0);
  }
  return state;
}

ChainInit make_chain_init(const LatentState& grids,
                          const Eigen::MatrixXd& trajectory,
                          const ParameterVector& params, const Vec5& phi) {
  ChainInit init;
  init.params = params;
  init.phi = phi;
  init.state = grids;
  for (int s = 0; s < kNumStocks; ++s) {
    const auto& times = grids.grids[s].anchor_times;
    init.state.anchors[s].resize(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
      init.state.anchors[s][k] = trajectory(times[k], s);
    }
  }
  return init;
}

FitResult fit_dataset(const ObservationSet& obs, const DriverSeries& drivers,
                      const FitSpec& spec, const Truth* truth) {
  obs.validate();
  spec.mcmc.validate();
  spec.priors.validate();

  FitResult result;
  result.state = build_latent_state(spec.latent_step, drivers.horizon(), obs);
  result.init = initialize(obs, drivers, spec.priors, spec.init, spec.acm,
                           derive_seed(spec.mcmc.seed, 901), truth,
                           spec.c_root_frac);

  Vec5 phi0;
  for (int s = 0; s < kNumStocks; ++s) {
    const double sd = 0.05 * spec.priors.init_mean[s];
    phi0[s] = 1.0 / (sd * sd);
  }

  std::vector<ChainInit> inits;
  for (int c = 0; c < spec.mcmc.chains; ++c) {
    ParameterVector params = result.init.params;
    if (c > 0) {  // dispersed starts for convergence checking
      Rng rng(derive_seed(spec.mcmc.seed, 902 + c));
      for (int p = 0; p < kNumParams; ++p) {
        params[p] = spec.priors.lower[p] +
                    draw_uniform(rng) * (spec.priors.upper[p] - spec.priors.lower[p]);
      }
    }
    inits.push_back(
        make_chain_init(result.state, result.init.trajectory, params, phi0));
  }

  result.chains = run_chains(spec.mcmc, spec.priors, drivers, obs, inits,
                             spec.acm, spec.precision_mode, spec.c_root_frac);
  return result;
}

double mean_log_ess_precisions(const ChainOutput& chain) {
  const Eigen::MatrixXd post = chain.post_precisions();
  double acc = 0.0;
  for (int s = 0; s < kNumStocks; ++s) {
    acc += std::log(ess(post.col(s)).value);
  }
  return acc / kNumStocks;
}

ParameterVector rhat_params(const std::vector<ChainOutput>& chains) {
  if (chains.size() < 2) throw ConfigError("rhat_params needs >= 2 chains");
  ParameterVector rhat;
  for (int p = 0; p < kNumParams; ++p) {
    std::vector<Eigen::VectorXd> series;
    series.reserve(chains.size());
    for (const auto& chain : chains) {
      series.push_back(chain.post_params().col(p));
    }
    rhat[p] = gelman_rubin(series);
  }
  return rhat;
}

CoverageScore score_coverage(const ChainOutput& chain, const LatentState& state,
                             const Truth& truth, double level) {
  CoverageScore score;
  for (int s = 0; s < kNumStocks; ++s) {
    const Eigen::MatrixXd& draws = chain.latents[s];
    if (draws.rows() == 0) {
      throw ConfigError("score_coverage needs stored latent draws");
    }
    const auto& times = state.grids[s].anchor_times;
    Eigen::VectorXd truth_at(static_cast<int>(times.size()));
    for (std::size_t k = 0; k < times.size(); ++k) {
      truth_at[static_cast<int>(k)] = truth.stocks(times[k], s);
    }
    score.latent_coverage[s] = hpd_coverage(draws, truth_at, level);

    const Eigen::VectorXd post_phi = chain.post_precisions().col(s);
    std::vector<double> phi_samples(post_phi.data(),
                                    post_phi.data() + post_phi.size());
    const auto [lo, hi] = hpd(phi_samples, level);
    score.phi_covered[s] = truth.phi_true[s] >= lo && truth.phi_true[s] <= hi;
  }
  return score;
}

CloningOutcome run_cloning(const ObservationSet& obs, const DriverSeries& drivers,
                           const FitSpec& spec, const std::vector<int>& r_list) {
  if (r_list.empty() || r_list.front() != 1 ||
      !std::is_sorted(r_list.begin(), r_list.end())) {
    throw ConfigError("cloning r list must be ascending and start at 1");
  }

  CloningOutcome outcome;
  outcome.r_list = r_list;
  for (int r : r_list) {
    FitSpec spec_r = spec;
    spec_r.mcmc.seed = derive_seed(spec.mcmc.seed, 7000 + r);
    outcome.fits_by_r.emplace(r, fit_dataset(clone(obs, r), drivers, spec_r));
  }

  for (int p = 0; p < kNumParams; ++p) {
    std::map<int, std::vector<double>> samples_by_r;
    for (int r : r_list) {
      std::vector<double> samples;
      for (const auto& chain : outcome.fits_by_r.at(r).chains) {
        const Eigen::VectorXd col = chain.post_params().col(p);
        samples.insert(samples.end(), col.data(), col.data() + col.size());
      }
      samples_by_r.emplace(r, std::move(samples));
    }
    outcome.verdicts[static_cast<std::size_t>(p)] =
        classify(samples_by_r, spec.priors.lower[p], spec.priors.upper[p], p);
  }
  return outcome;
}

}  // namespace cssm
