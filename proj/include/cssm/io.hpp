#ifndef CSSM_IO_HPP
#define CSSM_IO_HPP

#include <string>

#include <json.hpp>

#include "cssm/observations.hpp"
#include "cssm/sampler.hpp"
#include "cssm/synth.hpp"
#include "cssm/types.hpp"

namespace cssm {

// All floating-point CSV cells are printed with %.17g so that values
// round-trip exactly and repeated runs are byte-identical.
std::string format_double(double v);

// Header `day,t_max,t_min,t_mean,radiation,co2[,gpp]`, one row per day,
// days 1..T consecutive.
DriverSeries read_drivers_csv(const std::string& path);
void write_drivers_csv(const std::string& path, const DriverSeries& drivers);

// Rows `series,time,value`; series is a stock or flux code. Precisions,
// masks, and clone counts are configuration, not data, so readers leave the
// defaults in place for the caller to fill.
ObservationSet read_observations_csv(const std::string& path);
void write_observations_csv(const std::string& path, const ObservationSet& obs);

// Full hidden truth: one row per day with stocks and (from day 1) fluxes.
void write_truth_csv(const std::string& path, const Truth& truth);
Eigen::MatrixXd read_truth_stocks_csv(const std::string& path);

// One row per iteration: `iteration,p1..p11,phi_cf..phi_csom`.
void write_chain_csv(const std::string& path, const ChainOutput& out);

// Posterior latent summary: `stock,time,mean,hpd_lo,hpd_hi` per anchor.
void write_latent_summary_csv(const std::string& path, const ChainOutput& out,
                              const LatentState& state, double level = 0.95);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& doc);

}  // namespace cssm

#endif  // CSSM_IO_HPP
