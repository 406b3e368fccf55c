#include "cssm/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "cssm/diagnostics.hpp"

namespace cssm {

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) fields.push_back(cell);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool next_row(std::ifstream& in, std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fields = split_line(line);
    return true;
  }
  return false;
}

double parse_double(const std::string& cell, const std::string& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(path + ": bad numeric field '" + cell + "'");
  }
}

int parse_int(const std::string& cell, const std::string& path) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(path + ": bad integer field '" + cell + "'");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

DriverSeries read_drivers_csv(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::string> fields;
  if (!next_row(in, fields)) throw ConfigError(path + ": empty driver file");

  const std::vector<std::string> base = {"day",       "t_max", "t_min",
                                         "t_mean",    "radiation", "co2"};
  const bool has_gpp = fields.size() == base.size() + 1;
  if (fields.size() != base.size() && !has_gpp) {
    throw ConfigError(path + ": driver header must be day,t_max,t_min,t_mean,"
                             "radiation,co2[,gpp]");
  }
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (fields[i] != base[i]) {
      throw ConfigError(path + ": unexpected driver column '" + fields[i] +
                        "', wanted '" + base[i] + "'");
    }
  }
  if (has_gpp && fields.back() != "gpp") {
    throw ConfigError(path + ": seventh driver column must be 'gpp'");
  }

  std::vector<DriverRecord> records;
  while (next_row(in, fields)) {
    if (fields.size() != base.size() + (has_gpp ? 1 : 0)) {
      throw ConfigError(path + ": driver row has wrong field count");
    }
    DriverRecord rec;
    rec.day = parse_int(fields[0], path);
    rec.t_max = parse_double(fields[1], path);
    rec.t_min = parse_double(fields[2], path);
    rec.t_mean = parse_double(fields[3], path);
    rec.radiation = parse_double(fields[4], path);
    rec.co2 = parse_double(fields[5], path);
    if (has_gpp) rec.gpp_override = parse_double(fields[6], path);
    if (!rec.valid()) {
      throw ConfigError(path + ": invalid driver values at day " +
                        std::to_string(rec.day));
    }
    records.push_back(rec);
  }
  try {
    return DriverSeries(std::move(records));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_drivers_csv(const std::string& path, const DriverSeries& drivers) {
  auto out = open_output(path);
  const bool has_gpp =
      !drivers.records().empty() && drivers.records().front().gpp_override;
  out << "day,t_max,t_min,t_mean,radiation,co2";
  if (has_gpp) out << ",gpp";
  out << "\n";
  for (const auto& rec : drivers.records()) {
    out << rec.day << ',' << format_double(rec.t_max) << ','
        << format_double(rec.t_min) << ',' << format_double(rec.t_mean) << ','
        << format_double(rec.radiation) << ',' << format_double(rec.co2);
    if (has_gpp) {
      if (!rec.gpp_override) {
        throw ConfigError(path + ": mixed gpp availability in driver series");
      }
      out << ',' << format_double(*rec.gpp_override);
    }
    out << "\n";
  }
}

ObservationSet read_observations_csv(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::string> fields;
  if (!next_row(in, fields) || fields.size() != 3 || fields[0] != "series" ||
      fields[1] != "time" || fields[2] != "value") {
    throw ConfigError(path + ": observation header must be series,time,value");
  }

  ObservationSet obs;
  while (next_row(in, fields)) {
    if (fields.size() != 3) {
      throw ConfigError(path + ": observation row has wrong field count");
    }
    const std::string& series = fields[0];
    ObsPoint point;
    point.t = parse_int(fields[1], path);
    point.value = parse_double(fields[2], path);
    obs.horizon = std::max(obs.horizon, point.t);

    const auto& stocks = stock_names();
    const auto stock_it = std::find(stocks.begin(), stocks.end(), series);
    if (stock_it != stocks.end()) {
      obs.stock_obs[stock_it - stocks.begin()].push_back(point);
      continue;
    }
    const auto& fluxes = flux_names();
    const auto flux_it = std::find(fluxes.begin(), fluxes.end(), series);
    if (flux_it != fluxes.end()) {
      obs.flux_obs[flux_it - fluxes.begin()].push_back(point);
      continue;
    }
    throw ConfigError(path + ": unknown observation series '" + series + "'");
  }
  for (auto& points : obs.stock_obs) {
    std::sort(points.begin(), points.end(),
              [](const ObsPoint& a, const ObsPoint& b) { return a.t < b.t; });
  }
  for (auto& points : obs.flux_obs) {
    std::sort(points.begin(), points.end(),
              [](const ObsPoint& a, const ObsPoint& b) { return a.t < b.t; });
  }
  return obs;
}

void write_observations_csv(const std::string& path, const ObservationSet& obs) {
  auto out = open_output(path);
  out << "series,time,value\n";
  for (int s = 0; s < kNumStocks; ++s) {
    for (const auto& point : obs.stock_obs[s]) {
      out << stock_names()[s] << ',' << point.t << ','
          << format_double(point.value) << "\n";
    }
  }
  for (int j = 0; j < kNumFluxes; ++j) {
    for (const auto& point : obs.flux_obs[j]) {
      out << flux_names()[j] << ',' << point.t << ','
          << format_double(point.value) << "\n";
    }
  }
}

void write_truth_csv(const std::string& path, const Truth& truth) {
  auto out = open_output(path);
  out << "time";
  for (const auto& name : stock_names()) out << ',' << name;
  for (const auto& name : flux_names()) out << ',' << name;
  out << "\n";
  for (int t = 0; t <= truth.horizon(); ++t) {
    out << t;
    for (int s = 0; s < kNumStocks; ++s) {
      out << ',' << format_double(truth.stocks(t, s));
    }
    if (t == 0) {
      for (int j = 0; j < kNumFluxes; ++j) out << ',';
    } else {
      const FluxSet& f = truth.fluxes[static_cast<std::size_t>(t - 1)];
      for (int j = 0; j < kNumFluxes; ++j) {
        out << ',' << format_double(flux_value(f, static_cast<FluxKind>(j)));
      }
    }
    out << "\n";
  }
}

Eigen::MatrixXd read_truth_stocks_csv(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::string> fields;
  if (!next_row(in, fields) || fields.size() < 1 + kNumStocks ||
      fields[0] != "time") {
    throw ConfigError(path + ": truth header must start with time,stocks...");
  }
  for (int s = 0; s < kNumStocks; ++s) {
    if (fields[static_cast<std::size_t>(1 + s)] != stock_names()[s]) {
      throw ConfigError(path + ": truth stock columns out of order");
    }
  }

  std::vector<std::array<double, kNumStocks>> rows;
  while (next_row(in, fields)) {
    if (fields.size() < 1 + kNumStocks) {
      throw ConfigError(path + ": truth row has too few fields");
    }
    const int t = parse_int(fields[0], path);
    if (t != static_cast<int>(rows.size())) {
      throw ConfigError(path + ": truth rows must cover 0..T in order");
    }
    std::array<double, kNumStocks> row{};
    for (int s = 0; s < kNumStocks; ++s) {
      row[static_cast<std::size_t>(s)] =
          parse_double(fields[static_cast<std::size_t>(1 + s)], path);
    }
    rows.push_back(row);
  }
  Eigen::MatrixXd stocks(static_cast<int>(rows.size()), kNumStocks);
  for (int t = 0; t < stocks.rows(); ++t) {
    for (int s = 0; s < kNumStocks; ++s) {
      stocks(t, s) = rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
    }
  }
  return stocks;
}

void write_chain_csv(const std::string& path, const ChainOutput& out_data) {
  auto out = open_output(path);
  out << "iteration";
  for (int p = 0; p < kNumParams; ++p) out << ",p" << (p + 1);
  for (const auto& name : stock_names()) out << ",phi_" << name;
  out << "\n";
  for (int i = 0; i < out_data.params.rows(); ++i) {
    out << (i + 1);
    for (int p = 0; p < kNumParams; ++p) {
      out << ',' << format_double(out_data.params(i, p));
    }
    for (int s = 0; s < kNumStocks; ++s) {
      out << ',' << format_double(out_data.precisions(i, s));
    }
    out << "\n";
  }
}

void write_latent_summary_csv(const std::string& path, const ChainOutput& out_data,
                              const LatentState& state, double level) {
  auto out = open_output(path);
  out << "stock,time,mean,hpd_lo,hpd_hi\n";
  for (int s = 0; s < kNumStocks; ++s) {
    const Eigen::MatrixXd& draws = out_data.latents[s];
    if (draws.rows() == 0) continue;  // latent storage disabled
    const auto& times = state.grids[s].anchor_times;
    if (draws.cols() != static_cast<int>(times.size())) {
      throw ConfigError(path + ": latent draws do not match the grid");
    }
    std::vector<double> column(static_cast<std::size_t>(draws.rows()));
    for (int k = 0; k < draws.cols(); ++k) {
      for (int i = 0; i < draws.rows(); ++i) {
        column[static_cast<std::size_t>(i)] = draws(i, k);
      }
      const auto [lo, hi] = hpd(column, level);
      out << stock_names()[s] << ',' << times[static_cast<std::size_t>(k)]
          << ',' << format_double(draws.col(k).mean()) << ','
          << format_double(lo) << ',' << format_double(hi) << "\n";
    }
  }
}

nlohmann::json read_json(const std::string& path) {
  auto in = open_input(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return doc;
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << "\n";
}

}  // namespace cssm
