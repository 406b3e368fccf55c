#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cssm/experiments.hpp"
#include "cssm/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cssm {
namespace {

std::string param_label(int i) { return "p" + std::to_string(i + 1); }

std::string pad_index(int value, int width) {
  std::string digits = std::to_string(value);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  }
  return digits;
}

json default_config() {
  return json{
      {"drivers", ""},
      {"out", "runs"},
      {"seed", 0},
      {"jobs", 1},
      {"scenario",
       {{"stock_frequency", "daily"},
        {"flux_mask", "all"},
        {"horizon_days", 730},
        {"replicates", 1},
        {"seed", 1}}},
      {"fit",
       {{"latent_step", "daily"},
        {"precision_mode", "exact"},
        {"iterations", 10000},
        {"burn_in", 2000},
        {"chains", 1},
        {"seed", 1},
        {"store_latents", true},
        {"latent_thin", 10},
        {"tau", json::array()},
        {"delta", json::array()},
        {"init",
         {{"mode", "auto"},
          {"n_particles", 1000},
          {"lhs_size", 200},
          {"pf_precision_frac", 0.1},
          {"gap_threshold_days", 35}}}}},
      {"clone", {{"r_list", json::array({1, 5, 25})}}},
  };
}

// Overlay a user config onto the defaults; unknown keys are user errors so
// that typos never silently fall back to defaults.
void merge_config(json& base, const json& overlay, const std::string& where) {
  if (!overlay.is_object()) {
    throw ConfigError("config section '" + where + "' must be an object");
  }
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    if (!base.contains(it.key())) {
      throw ConfigError("unknown config key '" + where + "." + it.key() + "'");
    }
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_config(slot, it.value(), where + "." + it.key());
    } else {
      slot = it.value();
    }
  }
}

template <typename T>
T get_as(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad config value for '" + where + "." + key +
                      "': " + e.what());
  }
}

Vec5 vec5_from_json(const json& arr, const std::string& what) {
  if (!arr.is_array() || arr.size() != kNumStocks) {
    throw ConfigError(what + " must be an array of 5 numbers");
  }
  Vec5 v;
  for (int s = 0; s < kNumStocks; ++s) v[s] = arr[static_cast<std::size_t>(s)].get<double>();
  return v;
}

std::array<double, kNumFluxes> delta_from_json(const json& arr,
                                               const std::string& what) {
  if (!arr.is_array() || arr.size() != kNumFluxes) {
    throw ConfigError(what + " must be an array of " +
                      std::to_string(kNumFluxes) + " numbers");
  }
  std::array<double, kNumFluxes> out{};
  for (int j = 0; j < kNumFluxes; ++j) out[static_cast<std::size_t>(j)] = arr[static_cast<std::size_t>(j)].get<double>();
  return out;
}

template <typename Seq>
json json_from_seq(const Seq& values, int n) {
  json arr = json::array();
  for (int i = 0; i < n; ++i) arr.push_back(values[i]);
  return arr;
}

Scenario scenario_from(const json& j) {
  Scenario sc;
  sc.stock_frequency = get_as<std::string>(j, "stock_frequency", "scenario");
  sc.flux_mask = parse_flux_mask(get_as<std::string>(j, "flux_mask", "scenario"));
  sc.horizon_days = get_as<int>(j, "horizon_days", "scenario");
  sc.replicates = get_as<int>(j, "replicates", "scenario");
  sc.seed = get_as<std::uint64_t>(j, "seed", "scenario");
  sc.validate();
  return sc;
}

FitSpec fit_spec_from(const json& j, int jobs) {
  FitSpec spec;
  spec.latent_step = get_as<std::string>(j, "latent_step", "fit");
  const std::string pm = get_as<std::string>(j, "precision_mode", "fit");
  if (pm == "exact") {
    spec.precision_mode = PrecisionMode::kExact;
  } else if (pm == "pooled") {
    spec.precision_mode = PrecisionMode::kPooled;
  } else {
    throw ConfigError("unknown precision_mode '" + pm + "' (exact|pooled)");
  }
  spec.mcmc.total_iterations = get_as<int>(j, "iterations", "fit");
  spec.mcmc.burn_in = get_as<int>(j, "burn_in", "fit");
  spec.mcmc.chains = get_as<int>(j, "chains", "fit");
  spec.mcmc.seed = get_as<std::uint64_t>(j, "seed", "fit");
  spec.mcmc.store_latents = get_as<bool>(j, "store_latents", "fit");
  spec.mcmc.latent_thin = get_as<int>(j, "latent_thin", "fit");
  spec.mcmc.jobs = jobs;
  const json& ji = j.at("init");
  spec.init.mode = parse_init_mode(get_as<std::string>(ji, "mode", "fit.init"));
  spec.init.n_particles = get_as<int>(ji, "n_particles", "fit.init");
  spec.init.lhs_size = get_as<int>(ji, "lhs_size", "fit.init");
  spec.init.pf_precision_frac = get_as<double>(ji, "pf_precision_frac", "fit.init");
  spec.init.gap_threshold_days = get_as<int>(ji, "gap_threshold_days", "fit.init");
  spec.mcmc.validate();
  spec.init.validate();
  return spec;
}

DriverSeries load_drivers(const std::string& path, int horizon) {
  if (path.empty()) return synthetic_drivers(horizon);
  if (!fs::exists(path)) {
    throw ConfigError("driver file not found: " + path);
  }
  return read_drivers_csv(path);
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const json& cfg) {
  Scenario sc = scenario_from(cfg.at("scenario"));
  const auto seed_override = get_as<std::uint64_t>(cfg, "seed", "config");
  if (seed_override > 0) sc.seed = seed_override;
  const std::string drivers_path = get_as<std::string>(cfg, "drivers", "config");

  PriorSpec priors;
  AcmConfig acm;
  DriverSeries drivers = load_drivers(drivers_path, sc.horizon_days);
  const std::vector<Dataset> datasets =
      generate_study(sc, study_params(), drivers, priors, acm);

  const fs::path root = fs::path(get_as<std::string>(cfg, "out", "config")) /
                        (sc.stock_frequency + "_" + flux_mask_name(sc.flux_mask));
  for (const Dataset& ds : datasets) {
    const fs::path dir = root / ("rep_" + pad_index(ds.replicate, 3));
    fs::create_directories(dir);
    write_truth_csv((dir / "truth.csv").string(), ds.truth);
    write_observations_csv((dir / "obs.csv").string(), ds.obs);

    json manifest;
    manifest["command"] = "simulate";
    manifest["scenario"] = {{"stock_frequency", sc.stock_frequency},
                            {"flux_mask", flux_mask_name(sc.flux_mask)},
                            {"horizon_days", sc.horizon_days},
                            {"replicates", sc.replicates},
                            {"seed", sc.seed}};
    manifest["replicate"] = ds.replicate;
    manifest["seed"] = ds.seed;
    manifest["drivers"] = drivers_path.empty() ? "synthetic" : drivers_path;
    manifest["params"] = json_from_seq(ds.truth.params, kNumParams);
    manifest["phi_true"] = json_from_seq(ds.truth.phi_true, kNumStocks);
    manifest["init_stocks"] = json_from_seq(ds.truth.init_stocks, kNumStocks);
    manifest["tau"] = json_from_seq(ds.obs.tau, kNumStocks);
    manifest["delta"] = json_from_seq(ds.obs.delta, kNumFluxes);
    manifest["horizon_days"] = ds.obs.horizon;
    write_json((dir / "manifest.json").string(), manifest);
  }
  std::printf("wrote %d replicate(s) under %s\n",
              static_cast<int>(datasets.size()), root.string().c_str());
  return 0;
}

// --------------------------------------------------------------------- fit

struct DatasetOnDisk {
  fs::path dir;
  ObservationSet obs;
  json manifest;  // null when the directory has no manifest.json
  bool has_truth = false;
  Truth truth;  // stocks + phi_true (+ params) when present
};

DatasetOnDisk load_dataset(const fs::path& dir, const json& fit_cfg) {
  if (!fs::exists(dir / "obs.csv")) {
    throw ConfigError("no obs.csv under " + dir.string());
  }
  DatasetOnDisk ds;
  ds.dir = dir;
  ds.obs = read_observations_csv((dir / "obs.csv").string());

  bool have_tau = false;
  bool have_delta = false;
  if (fs::exists(dir / "manifest.json")) {
    ds.manifest = read_json((dir / "manifest.json").string());
    if (ds.manifest.contains("tau")) {
      ds.obs.tau = vec5_from_json(ds.manifest["tau"], "manifest tau");
      have_tau = true;
    }
    if (ds.manifest.contains("delta")) {
      ds.obs.delta = delta_from_json(ds.manifest["delta"], "manifest delta");
      have_delta = true;
    }
    if (ds.manifest.contains("scenario") &&
        ds.manifest["scenario"].contains("flux_mask")) {
      ds.obs.flux_mask =
          parse_flux_mask(ds.manifest["scenario"]["flux_mask"].get<std::string>());
    }
    if (ds.manifest.contains("horizon_days")) {
      ds.obs.horizon = ds.manifest["horizon_days"].get<int>();
    }
  }
  if (!fit_cfg.at("tau").empty()) {
    ds.obs.tau = vec5_from_json(fit_cfg.at("tau"), "fit.tau");
    have_tau = true;
  }
  if (!fit_cfg.at("delta").empty()) {
    ds.obs.delta = delta_from_json(fit_cfg.at("delta"), "fit.delta");
    have_delta = true;
  }
  if (!have_tau || !have_delta) {
    throw ConfigError(
        "observation precisions unknown: provide fit.tau and fit.delta or a "
        "dataset manifest.json carrying them");
  }
  ds.obs.validate();

  if (fs::exists(dir / "truth.csv") && !ds.manifest.is_null() &&
      ds.manifest.contains("phi_true")) {
    ds.truth.stocks = read_truth_stocks_csv((dir / "truth.csv").string());
    ds.truth.phi_true = vec5_from_json(ds.manifest["phi_true"], "manifest phi_true");
    if (ds.manifest.contains("params")) {
      const json& p = ds.manifest["params"];
      if (p.is_array() && p.size() == kNumParams) {
        for (int i = 0; i < kNumParams; ++i) ds.truth.params[i] = p[static_cast<std::size_t>(i)].get<double>();
      }
    }
    if (ds.manifest.contains("init_stocks")) {
      ds.truth.init_stocks =
          vec5_from_json(ds.manifest["init_stocks"], "manifest init_stocks");
    }
    ds.has_truth = true;
  }
  return ds;
}

void write_init_csv(const fs::path& path, const Eigen::MatrixXd& trajectory) {
  std::ofstream out = open_csv(path);
  out << "time";
  for (int s = 0; s < kNumStocks; ++s) out << ',' << stock_names()[static_cast<std::size_t>(s)];
  out << '\n';
  for (Eigen::Index t = 0; t < trajectory.rows(); ++t) {
    out << t;
    for (int s = 0; s < kNumStocks; ++s) out << ',' << format_double(trajectory(t, s));
    out << '\n';
  }
}

json fit_one(const DatasetOnDisk& ds, const DriverSeries& drivers,
             const FitSpec& spec, const json& cfg, const fs::path& outdir) {
  fs::create_directories(outdir);
  const auto t0 = std::chrono::steady_clock::now();
  const FitResult fit =
      fit_dataset(ds.obs, drivers, spec, ds.has_truth ? &ds.truth : nullptr);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const int n_chains = static_cast<int>(fit.chains.size());
  for (int c = 0; c < n_chains; ++c) {
    const ChainOutput& chain = fit.chains[static_cast<std::size_t>(c)];
    write_chain_csv((outdir / ("chain_" + pad_index(c, 2) + ".csv")).string(),
                    chain);
    if (spec.mcmc.store_latents) {
      write_latent_summary_csv(
          (outdir / ("latent_" + pad_index(c, 2) + ".csv")).string(), chain,
          fit.state);
    }
  }
  write_init_csv(outdir / "init.csv", fit.init.trajectory);

  json diag;
  diag["latent_step"] = spec.latent_step;
  diag["chains"] = n_chains;
  diag["log_ess_cutoff"] = std::log(200.0);
  {
    json mean_log = json::array();
    json per_stock;
    for (int s = 0; s < kNumStocks; ++s) per_stock[stock_names()[static_cast<std::size_t>(s)]] = json::array();
    json accept;
    for (int i = 0; i < kNumParams; ++i) accept[param_label(i)] = json::array();
    for (const ChainOutput& chain : fit.chains) {
      mean_log.push_back(mean_log_ess_precisions(chain));
      const Eigen::MatrixXd post_phi = chain.post_precisions();
      for (int s = 0; s < kNumStocks; ++s) {
        per_stock[stock_names()[static_cast<std::size_t>(s)]].push_back(
            ess(post_phi.col(s)).value);
      }
      for (int i = 0; i < kNumParams; ++i) {
        accept[param_label(i)].push_back(chain.accept_rate[i]);
      }
    }
    diag["mean_log_ess_phi"] = mean_log;
    diag["ess_phi"] = per_stock;
    diag["acceptance"] = accept;
  }
  if (n_chains > 1) {
    const ParameterVector rhat = rhat_params(fit.chains);
    json table;
    for (int i = 0; i < kNumParams; ++i) table[param_label(i)] = rhat[i];
    diag["rhat"] = table;
    std::ofstream out = open_csv(outdir / "rhat.csv");
    out << "param,rhat\n";
    std::printf("  %-5s %s\n", "param", "rhat");
    for (int i = 0; i < kNumParams; ++i) {
      out << param_label(i) << ',' << format_double(rhat[i]) << '\n';
      std::printf("  %-5s %.4f\n", param_label(i).c_str(), rhat[i]);
    }
  }
  if (ds.has_truth && spec.mcmc.store_latents) {
    const CoverageScore cov =
        score_coverage(fit.chains.front(), fit.state, ds.truth);
    json latent, phi_in;
    for (int s = 0; s < kNumStocks; ++s) {
      latent[stock_names()[static_cast<std::size_t>(s)]] = cov.latent_coverage[s];
      phi_in[stock_names()[static_cast<std::size_t>(s)]] = cov.phi_covered[s];
    }
    diag["coverage"] = {{"latent", latent}, {"phi_in_hpd", phi_in}};
  }
  if (!ds.manifest.is_null()) {
    if (ds.manifest.contains("scenario")) diag["scenario"] = ds.manifest["scenario"];
    if (ds.manifest.contains("replicate")) diag["replicate"] = ds.manifest["replicate"];
  }
  write_json((outdir / "diagnostics.json").string(), diag);

  json manifest;
  manifest["command"] = "fit";
  manifest["dataset"] = ds.dir.string();
  manifest["config"] = cfg;
  manifest["effective_seed"] = spec.mcmc.seed;
  manifest["wall_time_sec"] = wall;
  json chain_meta = json::array();
  for (const ChainOutput& chain : fit.chains) {
    json m;
    m["seed"] = chain.seed;
    json accept;
    for (int i = 0; i < kNumParams; ++i) accept[param_label(i)] = chain.accept_rate[i];
    m["acceptance"] = accept;
    chain_meta.push_back(m);
  }
  manifest["chains"] = chain_meta;
  manifest["init"] = {{"mode_used", fit.init.mode_used},
                      {"params", json_from_seq(fit.init.params, kNumParams)},
                      {"log_marginal", fit.init.log_marginal}};
  write_json((outdir / "manifest.json").string(), manifest);

  const json& mean_log = diag["mean_log_ess_phi"];
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : mean_log) best = std::max(best, v.get<double>());
  std::printf("fit %s: %d chain(s), %.1fs, init=%s, mean log ESS(phi) %.2f\n",
              ds.dir.string().c_str(), n_chains, wall,
              fit.init.mode_used.c_str(), best);
  return diag;
}

std::vector<fs::path> replicate_dirs(const fs::path& root) {
  std::vector<fs::path> dirs;
  if (fs::exists(root / "obs.csv")) {
    dirs.push_back(root);
    return dirs;
  }
  if (fs::is_directory(root)) {
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_directory() && fs::exists(entry.path() / "obs.csv")) {
        dirs.push_back(entry.path());
      }
    }
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) {
    throw ConfigError("no dataset (obs.csv) found under " + root.string());
  }
  return dirs;
}

int cmd_fit(const json& cfg, const std::string& dataset) {
  const int jobs = get_as<int>(cfg, "jobs", "config");
  FitSpec spec = fit_spec_from(cfg.at("fit"), jobs);
  const auto seed_override = get_as<std::uint64_t>(cfg, "seed", "config");
  if (seed_override > 0) spec.mcmc.seed = seed_override;
  const std::string drivers_path = get_as<std::string>(cfg, "drivers", "config");
  const fs::path out_root = get_as<std::string>(cfg, "out", "config");

  const std::vector<fs::path> dirs = replicate_dirs(dataset);
  const std::uint64_t base_seed = spec.mcmc.seed;
  DriverSeries drivers;
  int drivers_horizon = -1;
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    DatasetOnDisk ds = load_dataset(dirs[k], cfg.at("fit"));
    if (ds.obs.horizon != drivers_horizon) {
      drivers = load_drivers(drivers_path, ds.obs.horizon);
      drivers_horizon = ds.obs.horizon;
    }
    FitSpec rep_spec = spec;
    if (dirs.size() > 1) {
      rep_spec.mcmc.seed = derive_seed(base_seed, static_cast<std::uint64_t>(k));
    }
    const fs::path outdir =
        dirs.size() == 1 ? out_root : out_root / dirs[k].filename();
    fit_one(ds, drivers, rep_spec, cfg, outdir);
  }
  return 0;
}

// ------------------------------------------------------------------- clone

int cmd_clone(const json& cfg, const std::string& dataset) {
  const int jobs = get_as<int>(cfg, "jobs", "config");
  FitSpec spec = fit_spec_from(cfg.at("fit"), jobs);
  const auto seed_override = get_as<std::uint64_t>(cfg, "seed", "config");
  if (seed_override > 0) spec.mcmc.seed = seed_override;
  const std::string drivers_path = get_as<std::string>(cfg, "drivers", "config");
  const fs::path out_root = get_as<std::string>(cfg, "out", "config");

  std::vector<int> r_list;
  for (const auto& v : cfg.at("clone").at("r_list")) r_list.push_back(v.get<int>());

  DatasetOnDisk ds = load_dataset(fs::path(dataset), cfg.at("fit"));
  DriverSeries drivers = load_drivers(drivers_path, ds.obs.horizon);

  const auto t0 = std::chrono::steady_clock::now();
  const CloningOutcome outcome = run_cloning(ds.obs, drivers, spec, r_list);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(out_root);
  json cloning;
  cloning["command"] = "clone";
  cloning["dataset"] = ds.dir.string();
  cloning["r_list"] = r_list;
  if (!ds.manifest.is_null() && ds.manifest.contains("scenario")) {
    cloning["scenario"] = ds.manifest["scenario"];
  }

  // Per-r chain dumps plus pooled posterior stats per parameter.
  std::map<int, Eigen::MatrixXd> pooled_by_r;
  for (int r : r_list) {
    const FitResult& fit = outcome.fits_by_r.at(r);
    const fs::path rdir = out_root / ("r_" + pad_index(r, 2));
    fs::create_directories(rdir);
    for (std::size_t c = 0; c < fit.chains.size(); ++c) {
      write_chain_csv(
          (rdir / ("chain_" + pad_index(static_cast<int>(c), 2) + ".csv")).string(),
          fit.chains[c]);
    }
    write_init_csv(rdir / "init.csv", fit.init.trajectory);
    Eigen::Index rows = 0;
    for (const ChainOutput& chain : fit.chains) rows += chain.post_params().rows();
    Eigen::MatrixXd pooled(rows, kNumParams);
    Eigen::Index at = 0;
    for (const ChainOutput& chain : fit.chains) {
      const Eigen::MatrixXd post = chain.post_params();
      pooled.middleRows(at, post.rows()) = post;
      at += post.rows();
    }
    pooled_by_r[r] = std::move(pooled);
  }

  std::ofstream post_csv = open_csv(out_root / "posteriors_by_r.csv");
  post_csv << "param,r,mean,sd,hpd_lo,hpd_hi,variance_ratio_vs_r1\n";
  json params_out;
  for (int i = 0; i < kNumParams; ++i) {
    const IdentifiabilityVerdict& v = outcome.verdicts[static_cast<std::size_t>(i)];
    json entry;
    entry["verdict"] = verdict_name(v.verdict);
    entry["multimodal"] = v.multimodal;
    entry["sd_fraction_of_width"] = v.sd_fraction_of_width;
    entry["ratio_threshold"] = v.ratio_threshold;
    entry["sd_frac_threshold"] = v.sd_frac_threshold;
    json ratios, posterior;
    for (int r : r_list) {
      const Eigen::VectorXd col = pooled_by_r.at(r).col(i);
      const double mean = col.mean();
      const double var = (col.array() - mean).square().sum() /
                         std::max<double>(1.0, static_cast<double>(col.size() - 1));
      std::vector<double> samples(col.data(), col.data() + col.size());
      const auto interval = hpd(std::move(samples));
      const double ratio = v.variance_ratio_by_r.count(r)
                               ? v.variance_ratio_by_r.at(r)
                               : std::numeric_limits<double>::quiet_NaN();
      ratios[std::to_string(r)] = ratio;
      posterior[std::to_string(r)] = {{"mean", mean},
                                      {"sd", std::sqrt(var)},
                                      {"hpd_lo", interval.first},
                                      {"hpd_hi", interval.second}};
      post_csv << param_label(i) << ',' << r << ',' << format_double(mean) << ','
               << format_double(std::sqrt(var)) << ','
               << format_double(interval.first) << ','
               << format_double(interval.second) << ',' << format_double(ratio)
               << '\n';
    }
    entry["variance_ratio_by_r"] = ratios;
    entry["posterior_by_r"] = posterior;
    params_out[param_label(i)] = entry;
  }
  cloning["params"] = params_out;
  cloning["config"] = cfg;
  write_json((out_root / "cloning.json").string(), cloning);

  json manifest;
  manifest["command"] = "clone";
  manifest["dataset"] = ds.dir.string();
  manifest["config"] = cfg;
  manifest["wall_time_sec"] = wall;
  write_json((out_root / "manifest.json").string(), manifest);

  const int r_max = r_list.back();
  std::printf("%-6s %-14s %-18s %-14s %s\n", "param", "verdict",
              "var_ratio(r_max)", "sd/width(r_max)", "multimodal");
  for (int i = 0; i < kNumParams; ++i) {
    const IdentifiabilityVerdict& v = outcome.verdicts[static_cast<std::size_t>(i)];
    const double ratio = v.variance_ratio_by_r.count(r_max)
                             ? v.variance_ratio_by_r.at(r_max)
                             : std::numeric_limits<double>::quiet_NaN();
    std::printf("%-6s %-14s %-18.4g %-14.4g %s\n", param_label(i).c_str(),
                verdict_name(v.verdict).c_str(), ratio, v.sd_fraction_of_width,
                v.multimodal ? "yes" : "no");
  }
  std::printf("clone %s: %.1fs\n", ds.dir.string().c_str(), wall);
  return 0;
}

// ------------------------------------------------------------------ report

std::vector<fs::path> find_files(const fs::path& root, const std::string& name) {
  std::vector<fs::path> found;
  if (fs::is_directory(root)) {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().filename() == name) {
        found.push_back(entry.path());
      }
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

std::string scenario_cell(const json& diag, const char* key) {
  if (diag.contains("scenario") && diag["scenario"].contains(key)) {
    return diag["scenario"][key].get<std::string>();
  }
  return "";
}

int cmd_report(const json& cfg, const std::string& input,
               bool out_given) {
  const fs::path in_dir = input;
  if (!fs::is_directory(in_dir)) {
    throw ConfigError("report input is not a directory: " + input);
  }
  const fs::path out_dir =
      out_given ? fs::path(get_as<std::string>(cfg, "out", "config")) : in_dir;
  const std::vector<fs::path> diag_files = find_files(in_dir, "diagnostics.json");
  const std::vector<fs::path> clone_files = find_files(in_dir, "cloning.json");
  if (diag_files.empty() && clone_files.empty()) {
    throw ConfigError("no diagnostics.json or cloning.json found under " +
                      in_dir.string());
  }
  fs::create_directories(out_dir);

  int ess_rows = 0;
  {
    std::ofstream out = open_csv(out_dir / "ess_table.csv");
    out << "stock_frequency,flux_mask,replicate,latent_step,chain,"
           "mean_log_ess_phi,log_ess_cutoff\n";
    for (const fs::path& file : diag_files) {
      const json diag = read_json(file.string());
      const std::string freq = scenario_cell(diag, "stock_frequency");
      const std::string mask = scenario_cell(diag, "flux_mask");
      const std::string rep =
          diag.contains("replicate") ? std::to_string(diag["replicate"].get<int>())
                                     : "";
      const json& mean_log = diag.at("mean_log_ess_phi");
      for (std::size_t c = 0; c < mean_log.size(); ++c) {
        out << freq << ',' << mask << ',' << rep << ','
            << diag.at("latent_step").get<std::string>() << ',' << c << ','
            << format_double(mean_log[c].get<double>()) << ','
            << format_double(std::log(200.0)) << '\n';
        ++ess_rows;
      }
    }
  }

  // Table-3-style aggregate: per stock, average latent coverage and percent
  // of replicates whose precision HPD contains the truth.
  struct CoverageAgg {
    Vec5 latent_sum = Vec5::Zero();
    Vec5 phi_hits = Vec5::Zero();
    int n = 0;
  };
  std::map<std::string, CoverageAgg> coverage_by_group;
  int detail_rows = 0;
  {
    std::ofstream detail = open_csv(out_dir / "coverage_detail.csv");
    detail << "stock_frequency,flux_mask,replicate,latent_step,stock,"
              "latent_coverage,phi_in_hpd\n";
    for (const fs::path& file : diag_files) {
      const json diag = read_json(file.string());
      if (!diag.contains("coverage")) continue;
      const std::string freq = scenario_cell(diag, "stock_frequency");
      const std::string mask = scenario_cell(diag, "flux_mask");
      const std::string step = diag.at("latent_step").get<std::string>();
      const std::string rep =
          diag.contains("replicate") ? std::to_string(diag["replicate"].get<int>())
                                     : "";
      CoverageAgg& agg = coverage_by_group[freq + "," + mask + "," + step];
      for (int s = 0; s < kNumStocks; ++s) {
        const std::string& stock = stock_names()[static_cast<std::size_t>(s)];
        const double latent = diag["coverage"]["latent"][stock].get<double>();
        const bool phi_in = diag["coverage"]["phi_in_hpd"][stock].get<bool>();
        agg.latent_sum[s] += latent;
        agg.phi_hits[s] += phi_in ? 1.0 : 0.0;
        detail << freq << ',' << mask << ',' << rep << ',' << step << ','
               << stock << ',' << format_double(latent) << ','
               << (phi_in ? 1 : 0) << '\n';
        ++detail_rows;
      }
      ++agg.n;
    }
    std::ofstream table = open_csv(out_dir / "coverage_table.csv");
    table << "stock_frequency,flux_mask,latent_step,stock,avg_coverage,"
             "precision_pct,replicates\n";
    for (const auto& [key, agg] : coverage_by_group) {
      for (int s = 0; s < kNumStocks; ++s) {
        table << key << ',' << stock_names()[static_cast<std::size_t>(s)] << ','
              << format_double(agg.latent_sum[s] / agg.n) << ','
              << format_double(100.0 * agg.phi_hits[s] / agg.n) << ',' << agg.n
              << '\n';
      }
    }
  }

  int clone_rows = 0;
  {
    std::ofstream out = open_csv(out_dir / "cloning_table.csv");
    out << "stock_frequency,flux_mask,param,r,posterior_mean,posterior_sd,"
           "variance_ratio_vs_r1,sd_fraction_of_width,verdict\n";
    for (const fs::path& file : clone_files) {
      const json cl = read_json(file.string());
      const std::string freq = scenario_cell(cl, "stock_frequency");
      const std::string mask = scenario_cell(cl, "flux_mask");
      for (int i = 0; i < kNumParams; ++i) {
        const json& entry = cl.at("params").at(param_label(i));
        for (const auto& rv : cl.at("r_list")) {
          const std::string r_key = std::to_string(rv.get<int>());
          const json& post = entry.at("posterior_by_r").at(r_key);
          out << freq << ',' << mask << ',' << param_label(i) << ',' << r_key
              << ',' << format_double(post.at("mean").get<double>()) << ','
              << format_double(post.at("sd").get<double>()) << ','
              << format_double(entry.at("variance_ratio_by_r").at(r_key).get<double>())
              << ',' << format_double(entry.at("sd_fraction_of_width").get<double>())
              << ',' << entry.at("verdict").get<std::string>() << '\n';
          ++clone_rows;
        }
      }
    }
  }

  std::printf(
      "report %s: ess_table.csv (%d rows), coverage_detail.csv (%d rows), "
      "cloning_table.csv (%d rows)\n",
      in_dir.string().c_str(), ess_rows, detail_rows, clone_rows);
  return 0;
}

}  // namespace
}  // namespace cssm

int main(int argc, char** argv) {
  using namespace cssm;

  CLI::App app{"linear-autoregressive carbon state space model toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, drivers_path;
  std::uint64_t seed = 0;
  int jobs = 1;
  auto* opt_config = app.add_option("--config", config_path, "JSON config file");
  auto* opt_seed = app.add_option("--seed", seed, "override the command seed");
  auto* opt_jobs = app.add_option("--jobs", jobs, "worker threads for chain fan-out");
  auto* opt_out = app.add_option("--out", out_dir, "output directory");
  auto* opt_drivers = app.add_option("--drivers", drivers_path, "driver CSV path");

  CLI::App* sim = app.add_subcommand("simulate", "generate synthetic replicate datasets");
  std::string sc_freq, sc_mask;
  int sc_horizon = 0, sc_reps = 0;
  auto* opt_freq = sim->add_option("--scenario", sc_freq,
                                   "stock observation frequency (daily|monthly|annual)");
  auto* opt_mask = sim->add_option("--flux-mask", sc_mask, "all|neon_gpp|neon_nee");
  auto* opt_horizon = sim->add_option("--horizon", sc_horizon, "days simulated");
  auto* opt_reps = sim->add_option("--replicates", sc_reps, "replicate count");

  std::string fit_dataset_dir, fit_step, fit_pm, fit_init_mode;
  int fit_iters = 0, fit_burn = 0, fit_chains = 0, fit_particles = 0, fit_lhs = 0;
  CLI::App* fit = app.add_subcommand("fit", "run the MCMC sampler on a dataset");
  fit->add_option("dataset", fit_dataset_dir, "dataset directory (obs.csv or rep_* tree)")
      ->required()
      ->check(CLI::ExistingDirectory);
  auto* opt_step = fit->add_option("--latent-step", fit_step,
                                   "daily|monthly|annual|explicit:[t1,t2,...]");
  auto* opt_pm = fit->add_option("--precision-mode", fit_pm, "exact|pooled");
  auto* opt_iters = fit->add_option("--iterations", fit_iters, "total MCMC iterations");
  auto* opt_burn = fit->add_option("--burn-in", fit_burn, "burn-in iterations");
  auto* opt_chains = fit->add_option("--chains", fit_chains, "independent chains");
  auto* opt_init = fit->add_option("--init-mode", fit_init_mode,
                                   "auto|gp|particle_filter|truth_debug");
  auto* opt_particles = fit->add_option("--particles", fit_particles,
                                        "particle count for the filter initializer");
  auto* opt_lhs = fit->add_option("--lhs-size", fit_lhs,
                                  "Latin hypercube design size for the initializer");

  std::string clone_dataset_dir;
  std::vector<int> clone_r;
  CLI::App* clone_cmd = app.add_subcommand("clone", "data-cloning identifiability study");
  clone_cmd->add_option("dataset", clone_dataset_dir, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  auto* opt_rlist = clone_cmd->add_option("--r-list", clone_r, "cloning levels, ascending from 1")
                        ->delimiter(',');
  auto* opt_cstep = clone_cmd->add_option("--latent-step", fit_step,
                                          "daily|monthly|annual|explicit:[t1,t2,...]");
  auto* opt_citers = clone_cmd->add_option("--iterations", fit_iters, "total MCMC iterations");
  auto* opt_cburn = clone_cmd->add_option("--burn-in", fit_burn, "burn-in iterations");

  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "aggregate run outputs into summary tables");
  report->add_option("input", report_dir, "directory holding fit/clone outputs")
      ->required()
      ->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    json cfg = default_config();
    if (*opt_config) {
      if (!fs::exists(config_path)) {
        throw ConfigError("config file not found: " + config_path);
      }
      merge_config(cfg, read_json(config_path), "config");
    }
    if (*opt_seed) cfg["seed"] = seed;
    if (*opt_jobs) cfg["jobs"] = jobs;
    if (*opt_out) cfg["out"] = out_dir;
    if (*opt_drivers) cfg["drivers"] = drivers_path;
    if (*opt_freq) cfg["scenario"]["stock_frequency"] = sc_freq;
    if (*opt_mask) cfg["scenario"]["flux_mask"] = sc_mask;
    if (*opt_horizon) cfg["scenario"]["horizon_days"] = sc_horizon;
    if (*opt_reps) cfg["scenario"]["replicates"] = sc_reps;
    if (*opt_step || *opt_cstep) cfg["fit"]["latent_step"] = fit_step;
    if (*opt_pm) cfg["fit"]["precision_mode"] = fit_pm;
    if (*opt_iters || *opt_citers) cfg["fit"]["iterations"] = fit_iters;
    if (*opt_burn || *opt_cburn) cfg["fit"]["burn_in"] = fit_burn;
    if (*opt_chains) cfg["fit"]["chains"] = fit_chains;
    if (*opt_init) cfg["fit"]["init"]["mode"] = fit_init_mode;
    if (*opt_particles) cfg["fit"]["init"]["n_particles"] = fit_particles;
    if (*opt_lhs) cfg["fit"]["init"]["lhs_size"] = fit_lhs;
    if (*opt_rlist) cfg["clone"]["r_list"] = clone_r;

    if (sim->parsed()) return cmd_simulate(cfg);
    if (fit->parsed()) return cmd_fit(cfg, fit_dataset_dir);
    if (clone_cmd->parsed()) return cmd_clone(cfg, clone_dataset_dir);
    if (report->parsed()) return cmd_report(cfg, report_dir, static_cast<bool>(*opt_out));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
