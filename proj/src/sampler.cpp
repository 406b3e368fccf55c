#include "cssm/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

namespace cssm {

namespace {

double draw_from_precision(Rng& rng, double numerator, double precision) {
  if (!(precision > 0.0) || !std::isfinite(precision)) {
    throw NumericError("non-positive or non-finite conditional precision");
  }
  return draw_normal(rng, numerator / precision, 1.0 / std::sqrt(precision));
}

}  // namespace

double gibbs_latent_interior(Rng& rng, double pred_mean_left, double phi_left,
                             double a_right, double b_right, double next_value,
                             double phi_right, double obs_precision,
                             double obs_value_sum) {
  const double precision =
      phi_left + phi_right * a_right * a_right + obs_precision;
  const double numerator = phi_left * pred_mean_left +
                           phi_right * a_right * (next_value - b_right) +
                           obs_value_sum;
  return draw_from_precision(rng, numerator, precision);
}

double gibbs_latent_initial(Rng& rng, double prior_mean, double prior_precision,
                            double a_right, double b_right, double next_value,
                            double phi_right, double obs_precision,
                            double obs_value_sum) {
  const double precision =
      prior_precision + phi_right * a_right * a_right + obs_precision;
  const double numerator = prior_precision * prior_mean +
                           phi_right * a_right * (next_value - b_right) +
                           obs_value_sum;
  return draw_from_precision(rng, numerator, precision);
}

double gibbs_latent_final(Rng& rng, double pred_mean_left, double phi_left,
                          double obs_precision, double obs_value_sum) {
  const double precision = phi_left + obs_precision;
  const double numerator = phi_left * pred_mean_left + obs_value_sum;
  return draw_from_precision(rng, numerator, precision);
}

double gibbs_precision(Rng& rng, int n_windows, double rate) {
  if (n_windows < 1) {
    throw ConfigError("gibbs_precision needs at least one transition");
  }
  return draw_gamma_rate(rng, 0.5 * n_windows, std::max(rate, 1e-12));
}

std::vector<std::vector<int>> correlation_blocks(const Eigen::MatrixXd& samples,
                                                 double threshold) {
  const int d = static_cast<int>(samples.cols());
  std::vector<int> parent(d);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };

  const auto n = samples.rows();
  if (n >= 10) {
    const Eigen::RowVectorXd mean = samples.colwise().mean();
    const Eigen::MatrixXd centered = samples.rowwise() - mean;
    const Eigen::MatrixXd cov =
        centered.adjoint() * centered / static_cast<double>(n - 1);
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) {
        const double denom = std::sqrt(cov(i, i) * cov(j, j));
        if (denom <= 0.0) continue;
        if (std::abs(cov(i, j)) / denom > threshold) {
          parent[find(i)] = find(j);
        }
      }
    }
  }

  std::vector<std::vector<int>> blocks;
  std::vector<int> block_of(d, -1);
  for (int i = 0; i < d; ++i) {
    const int root = find(i);
    if (block_of[root] < 0) {
      block_of[root] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    blocks[block_of[root]].push_back(i);
  }
  return blocks;
}

double propose_block_tn(Rng& rng, const BlockProposal& block,
                        const ParameterVector& current,
                        const ParameterVector& lower,
                        const ParameterVector& upper,
                        ParameterVector* proposed) {
  *proposed = current;
  const int d = static_cast<int>(block.idx.size());
  Eigen::VectorXd z(d);
  double logq = 0.0;
  for (int i = 0; i < d; ++i) {
    const int pi = block.idx[i];
    double center = current[pi];
    for (int j = 0; j < i; ++j) center += block.chol(i, j) * z[j];
    const double s = block.chol(i, i);
    const double value = draw_trunc_normal(rng, center, s, lower[pi], upper[pi]);
    z[i] = (value - center) / s;
    (*proposed)[pi] = value;
    logq += norm_logpdf_std(z[i]) - std::log(s) -
            trunc_normal_log_mass(center, s, lower[pi], upper[pi]);
  }
  return logq;
}

double block_tn_logpdf(const BlockProposal& block, const ParameterVector& from,
                       const ParameterVector& to, const ParameterVector& lower,
                       const ParameterVector& upper) {
  const int d = static_cast<int>(block.idx.size());
  Eigen::VectorXd z(d);
  double logq = 0.0;
  for (int i = 0; i < d; ++i) {
    const int pi = block.idx[i];
    double center = from[pi];
    for (int j = 0; j < i; ++j) center += block.chol(i, j) * z[j];
    const double s = block.chol(i, i);
    z[i] = (to[pi] - center) / s;
    logq += norm_logpdf_std(z[i]) - std::log(s) -
            trunc_normal_log_mass(center, s, lower[pi], upper[pi]);
  }
  return logq;
}

ChainOutput run_mcmc(const MCMCConfig& config, const PriorSpec& priors,
                     const DriverSeries& drivers, const ObservationSet& obs,
                     const ChainInit& init, const AcmConfig& acm,
                     PrecisionMode mode, double c_root_frac) {
  config.validate();
  priors.validate();
  obs.validate();
  init.state.validate(drivers.horizon());
  for (int i = 0; i < kNumParams; ++i) {
    if (!(init.params[i] >= priors.lower[i] && init.params[i] <= priors.upper[i])) {
      throw ConfigError("initial parameters outside prior bounds");
    }
  }
  for (int s = 0; s < kNumStocks; ++s) {
    if (!(init.phi[s] > 0.0)) {
      throw ConfigError("initial precisions must be positive");
    }
  }

  Rng rng(config.seed);
  LatentState st = init.state;
  ParameterVector p = init.params;
  Vec5 phi = init.phi;
  const int r = obs.clone_count;

  PathEngine cur(&drivers, &obs, acm, mode, c_root_frac);
  PathEngine prop(&drivers, &obs, acm, mode, c_root_frac);
  cur.bind(st);
  prop.bind(st);
  if (cur.has_non_anchor_stock_obs()) {
    throw ConfigError(
        "stock observations must sit on latent grid anchors for Gibbs "
        "updates; add their times to the grid");
  }

  cur.refresh(p, st);
  double cur_ll = cur.total(phi, r);
  if (!std::isfinite(cur_ll)) {
    throw NumericError("non-finite log-likelihood at initialization");
  }

  const int total = config.total_iterations;
  ChainOutput out;
  out.params.resize(total, kNumParams);
  out.precisions.resize(total, kNumStocks);
  out.seed = config.seed;
  out.burn_in = config.burn_in;

  int store_rows = 0;
  if (config.store_latents) {
    store_rows = (total - config.burn_in + config.latent_thin - 1) /
                 config.latent_thin;
    for (int s = 0; s < kNumStocks; ++s) {
      out.latents[s].resize(store_rows,
                            static_cast<int>(st.anchors[s].size()));
    }
    out.latent_iterations.reserve(store_rows);
  }

  // Burn-in phase: univariate truncated-normal proposals with scale
  // adaptation toward the target acceptance rate.
  ParameterVector scale;
  for (int i = 0; i < kNumParams; ++i) {
    scale[i] = 0.1 * (priors.upper[i] - priors.lower[i]);
  }
  auto univariate_blocks = [&]() {
    std::vector<BlockProposal> uni;
    uni.reserve(kNumParams);
    for (int i = 0; i < kNumParams; ++i) {
      Eigen::MatrixXd c(1, 1);
      c(0, 0) = scale[i];
      uni.push_back({{i}, c});
    }
    return uni;
  };
  std::vector<BlockProposal> proposal_blocks = univariate_blocks();

  Eigen::Array<double, kNumParams, 1> batch_accept =
      Eigen::Array<double, kNumParams, 1>::Zero();
  Eigen::Array<double, kNumParams, 1> post_accept =
      Eigen::Array<double, kNumParams, 1>::Zero();

  auto rebuild_blocks = [&](int upto) {
    int from = config.burn_in;
    if (upto - from < 50) from = std::max(0, config.burn_in / 2);
    const int count = upto - from;
    const Eigen::MatrixXd window = out.params.middleRows(from, count);
    const auto partition = correlation_blocks(window, config.corr_threshold);

    proposal_blocks.clear();
    const Eigen::RowVectorXd mean = window.colwise().mean();
    const Eigen::MatrixXd centered = window.rowwise() - mean;
    for (const std::vector<int>& idx : partition) {
      const int d = static_cast<int>(idx.size());
      Eigen::MatrixXd sub(count, d);
      for (int j = 0; j < d; ++j) sub.col(j) = centered.col(idx[j]);
      Eigen::MatrixXd cov = sub.adjoint() * sub /
                            static_cast<double>(std::max(1, count - 1));
      const double factor =
          config.block_scale > 0.0 ? config.block_scale : 2.38 * 2.38 / d;
      cov *= factor;
      for (int j = 0; j < d; ++j) {
        const double width = priors.upper[idx[static_cast<std::size_t>(j)]] -
                             priors.lower[idx[static_cast<std::size_t>(j)]];
        cov(j, j) += config.cov_ridge * width * width;
      }
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      Eigen::MatrixXd chol;
      if (llt.info() == Eigen::Success) {
        chol = llt.matrixL();
      } else {
        // Degenerate window; fall back to independent diagonal steps.
        chol = cov.diagonal().cwiseSqrt().asDiagonal();
      }
      proposal_blocks.push_back({idx, chol});
    }
  };

  std::array<bool, kNumParams> accepted_param{};
  auto rwmh_step = [&]() {
    accepted_param.fill(false);
    for (const BlockProposal& block : proposal_blocks) {
      ParameterVector cand;
      const double lq_fwd =
          propose_block_tn(rng, block, p, priors.lower, priors.upper, &cand);
      prop.refresh(cand, st);
      const double cand_ll = prop.total(phi, r);
      const double lq_rev =
          block_tn_logpdf(block, cand, p, priors.lower, priors.upper);
      const double log_alpha = cand_ll - cur_ll + lq_rev - lq_fwd;
      if (std::isfinite(cand_ll) &&
          std::log(draw_uniform(rng)) < log_alpha) {
        std::swap(cur, prop);
        p = cand;
        cur_ll = cand_ll;
        for (int pi : block.idx) accepted_param[pi] = true;
      }
    }
  };

  // Latent conditionals use the process and stock-observation terms; flux
  // data constrains the states only through the parameter acceptance ratio.
  auto latent_sweep = [&]() {
    for (int s = 0; s < kNumStocks; ++s) {
      // Litter and som offsets depend on feeder stocks updated earlier in
      // this sweep; their coefficient tables must be rebuilt first.
      if (s == kLitter || s == kSom) cur.rebuild_coeffs(s, st);
      const std::vector<WindowEntry>& wins = cur.windows(s);
      std::vector<double>& x = st.anchors[s];
      const int K = static_cast<int>(wins.size());
      const double tau = obs.tau[s];

      auto phi_eff = [&](int k) {
        return mode == PrecisionMode::kExact ? phi[s] / wins[k].w : phi[s];
      };
      auto obs_prec = [&](int k) {
        return static_cast<double>(r) * cur.anchor_obs_count(s, k) * tau;
      };
      auto obs_sum = [&](int k) {
        return static_cast<double>(r) * tau * cur.anchor_obs_sum(s, k);
      };

      x[0] = gibbs_latent_initial(rng, priors.init_mean[s],
                                  priors.init_precision[s], wins[0].a,
                                  wins[0].b, x[1], phi_eff(0), obs_prec(0),
                                  obs_sum(0));
      for (int k = 1; k < K; ++k) {
        const double pred_left = wins[k - 1].a * x[k - 1] + wins[k - 1].b;
        x[k] = gibbs_latent_interior(rng, pred_left, phi_eff(k - 1), wins[k].a,
                                     wins[k].b, x[k + 1], phi_eff(k),
                                     obs_prec(k), obs_sum(k));
      }
      const double pred_left = wins[K - 1].a * x[K - 1] + wins[K - 1].b;
      x[K] = gibbs_latent_final(rng, pred_left, phi_eff(K - 1), obs_prec(K),
                                obs_sum(K));
      cur.refill_stock(s, st);
    }
    cur.rescore_data();
  };

  int stored = 0;
  for (int iter = 0; iter < total; ++iter) {
    if (iter < config.burn_in) {
      rwmh_step();
      for (int i = 0; i < kNumParams; ++i) {
        if (accepted_param[i]) batch_accept[i] += 1.0;
      }
      if ((iter + 1) % config.adapt_interval == 0) {
        for (int i = 0; i < kNumParams; ++i) {
          const double rate = batch_accept[i] / config.adapt_interval;
          scale[i] *= std::exp(rate - config.target_accept);
          const double width = priors.upper[i] - priors.lower[i];
          scale[i] = std::clamp(scale[i], 1e-8 * width, width);
        }
        batch_accept.setZero();
        proposal_blocks = univariate_blocks();
      }
    } else {
      if ((iter - config.burn_in) % config.block_refresh == 0) {
        rebuild_blocks(iter);
      }
      rwmh_step();
      for (int i = 0; i < kNumParams; ++i) {
        if (accepted_param[i]) post_accept[i] += 1.0;
      }
    }

    latent_sweep();

    for (int s = 0; s < kNumStocks; ++s) {
      phi[s] = gibbs_precision(rng, static_cast<int>(cur.windows(s).size()),
                               cur.rate(s));
    }
    cur_ll = cur.total(phi, r);
    if (!std::isfinite(cur_ll)) {
      throw NumericError("chain diverged at iteration " + std::to_string(iter));
    }

    for (int i = 0; i < kNumParams; ++i) out.params(iter, i) = p[i];
    for (int s = 0; s < kNumStocks; ++s) out.precisions(iter, s) = phi[s];
    if (config.store_latents && iter >= config.burn_in &&
        (iter - config.burn_in) % config.latent_thin == 0) {
      for (int s = 0; s < kNumStocks; ++s) {
        for (std::size_t k = 0; k < st.anchors[s].size(); ++k) {
          out.latents[s](stored, static_cast<int>(k)) = st.anchors[s][k];
        }
      }
      out.latent_iterations.push_back(iter);
      ++stored;
    }
  }

  const double denom = static_cast<double>(total - config.burn_in);
  for (int i = 0; i < kNumParams; ++i) out.accept_rate[i] = post_accept[i] / denom;
  return out;
}

std::vector<ChainOutput> run_chains(const MCMCConfig& config,
                                    const PriorSpec& priors,
                                    const DriverSeries& drivers,
                                    const ObservationSet& obs,
                                    const std::vector<ChainInit>& inits,
                                    const AcmConfig& acm, PrecisionMode mode,
                                    double c_root_frac) {
  if (static_cast<int>(inits.size()) != config.chains) {
    throw ConfigError("need exactly one chain initialization per chain");
  }
  std::vector<ChainOutput> outputs(inits.size());
  auto run_one = [&](int c) {
    MCMCConfig chain_cfg = config;
    chain_cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(c));
    outputs[static_cast<std::size_t>(c)] =
        run_mcmc(chain_cfg, priors, drivers, obs, inits[c], acm, mode,
                 c_root_frac);
  };
  const int workers = std::min(config.jobs, config.chains);
  if (workers <= 1) {
    for (int c = 0; c < config.chains; ++c) run_one(c);
    return outputs;
  }
  // Chains are independent given their derived seeds; any worker count yields
  // the same indexed outputs. The first exception wins deterministically by
  // chain index.
  std::atomic<int> next{0};
  std::mutex err_mutex;
  int err_chain = -1;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int c = next.fetch_add(1); c < config.chains; c = next.fetch_add(1)) {
        try {
          run_one(c);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (err_chain < 0 || c < err_chain) {
            err_chain = c;
            err = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return outputs;
}

}  // namespace cssm
