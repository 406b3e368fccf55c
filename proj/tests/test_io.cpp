#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cssm/experiments.hpp"
#include "cssm/io.hpp"
#include "cssm/synth.hpp"

using namespace cssm;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cssm_io_" + name);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST_CASE("doubles round trip exactly through the CSV formatter") {
  const std::vector<double> tricky = {0.1,
                                      1.0 / 3.0,
                                      1.096e-5,
                                      -1.7976931348623157e308,
                                      5e-324,
                                      123456789.123456789,
                                      0.0};
  for (double v : tricky) {
    const std::string text = format_double(v);
    CHECK(std::strtod(text.c_str(), nullptr) == v);
  }
}

TEST_CASE("driver series round trips exactly") {
  const DriverSeries drivers = synthetic_drivers(40);
  const auto path = temp_file("drivers.csv");
  write_drivers_csv(path.string(), drivers);
  const DriverSeries back = read_drivers_csv(path.string());
  REQUIRE(back.horizon() == 40);
  for (int t = 1; t <= 40; ++t) {
    const DriverRecord& a = drivers.at_day(t);
    const DriverRecord& b = back.at_day(t);
    CHECK(a.t_max == b.t_max);
    CHECK(a.t_min == b.t_min);
    CHECK(a.t_mean == b.t_mean);
    CHECK(a.radiation == b.radiation);
    CHECK(a.co2 == b.co2);
  }
  std::filesystem::remove(path);
}

TEST_CASE("the bundled driver file is the synthetic two-year series") {
  const std::filesystem::path bundled =
      std::filesystem::path(CSSM_SOURCE_DIR) / "data" / "drivers_2yr.csv";
  REQUIRE(std::filesystem::exists(bundled));
  const DriverSeries disk = read_drivers_csv(bundled.string());
  const DriverSeries gen = synthetic_drivers(730);
  REQUIRE(disk.horizon() == 730);
  for (int t = 1; t <= 730; ++t) {
    const DriverRecord& a = disk.at_day(t);
    const DriverRecord& b = gen.at_day(t);
    CHECK(a.t_mean == b.t_mean);
    CHECK(a.radiation == b.radiation);
    CHECK(a.co2 == b.co2);
  }
}

TEST_CASE("observations round trip and infer the horizon") {
  ObservationSet obs;
  obs.horizon = 60;
  obs.stock_obs[kFoliage] = {{0, 101.5}, {30, 99.25}, {60, 103.125}};
  obs.stock_obs[kSom] = {{0, 11000.0}};
  obs.flux_obs[kFluxNee] = {{1, -0.52}, {2, 0.13}, {60, 0.7071067811865476}};
  obs.flux_obs[kFluxGpp] = {{5, 3.25}};

  const auto path = temp_file("obs.csv");
  write_observations_csv(path.string(), obs);
  const ObservationSet back = read_observations_csv(path.string());

  CHECK(back.horizon == 60);
  REQUIRE(back.stock_obs[kFoliage].size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.stock_obs[kFoliage][i].t == obs.stock_obs[kFoliage][i].t);
    CHECK(back.stock_obs[kFoliage][i].value == obs.stock_obs[kFoliage][i].value);
  }
  CHECK(back.stock_obs[kRoots].empty());
  REQUIRE(back.flux_obs[kFluxNee].size() == 3);
  CHECK(back.flux_obs[kFluxNee][2].value == 0.7071067811865476);
  CHECK(back.flux_obs[kFluxGpp].front().t == 5);
  std::filesystem::remove(path);
}

TEST_CASE("unknown observation series is rejected with its name") {
  const auto path = temp_file("bad_obs.csv");
  {
    std::ofstream out(path);
    out << "series,time,value\n";
    out << "cf,0,100\n";
    out << "humidity,3,0.5\n";
  }
  try {
    read_observations_csv(path.string());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("humidity") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("truth stocks round trip through the truth CSV") {
  DriverSeries drivers = synthetic_drivers(30);
  PriorSpec priors;
  AcmConfig acm;
  const Truth truth = simulate_truth(study_params(), drivers, priors,
                                     default_phi_true(priors), acm, 11);
  const auto path = temp_file("truth.csv");
  write_truth_csv(path.string(), truth);
  const Eigen::MatrixXd stocks = read_truth_stocks_csv(path.string());
  REQUIRE(stocks.rows() == truth.stocks.rows());
  CHECK((stocks - truth.stocks).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("chain CSV has the documented header and exact cells") {
  ChainOutput out;
  out.params = Eigen::MatrixXd::Zero(3, kNumParams);
  out.precisions = Eigen::MatrixXd::Zero(3, kNumStocks);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < kNumParams; ++j) out.params(i, j) = 0.1 * (i + 1) + 0.01 * j;
    for (int s = 0; s < kNumStocks; ++s) out.precisions(i, s) = 1.0 / (i + s + 1.0);
  }
  const auto path = temp_file("chain.csv");
  write_chain_csv(path.string(), out);

  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  std::vector<std::string> header = split(line);
  REQUIRE(header.size() == 1 + kNumParams + kNumStocks);
  CHECK(header[0] == "iteration");
  CHECK(header[1] == "p1");
  CHECK(header[11] == "p11");
  CHECK(header[12] == "phi_cf");
  CHECK(header[16] == "phi_csom");

  int rows = 0;
  while (std::getline(in, line)) {
    const std::vector<std::string> cells = split(line);
    REQUIRE(cells.size() == header.size());
    CHECK(std::stoi(cells[0]) == rows + 1);  // iterations are 1-based
    for (int j = 0; j < kNumParams; ++j) {
      CHECK(std::strtod(cells[static_cast<std::size_t>(1 + j)].c_str(), nullptr) ==
            out.params(rows, j));
    }
    for (int s = 0; s < kNumStocks; ++s) {
      CHECK(std::strtod(
                cells[static_cast<std::size_t>(1 + kNumParams + s)].c_str(),
                nullptr) == out.precisions(rows, s));
    }
    ++rows;
  }
  CHECK(rows == 3);
  std::filesystem::remove(path);
}

TEST_CASE("latent summary covers every anchor of every stock") {
  ObservationSet obs;
  obs.horizon = 60;
  LatentState state = build_latent_state("monthly", 60, obs);

  ChainOutput out;
  out.params = Eigen::MatrixXd::Zero(50, kNumParams);
  out.precisions = Eigen::MatrixXd::Ones(50, kNumStocks);
  Rng rng(3);
  int expected_rows = 0;
  for (int s = 0; s < kNumStocks; ++s) {
    const int k = static_cast<int>(state.grids[s].anchor_times.size());
    out.latents[s] = Eigen::MatrixXd(50, k);
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < k; ++j) {
        out.latents[s](i, j) = 100.0 + s + draw_normal(rng, 0.0, 1.0);
      }
    }
    expected_rows += k;
  }

  const auto path = temp_file("latents.csv");
  write_latent_summary_csv(path.string(), out, state);
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "stock,time,mean,hpd_lo,hpd_hi");
  int rows = 0;
  while (std::getline(in, line)) {
    const std::vector<std::string> cells = split(line);
    REQUIRE(cells.size() == 5);
    const double mean = std::strtod(cells[2].c_str(), nullptr);
    const double lo = std::strtod(cells[3].c_str(), nullptr);
    const double hi = std::strtod(cells[4].c_str(), nullptr);
    CHECK(lo < mean);
    CHECK(mean < hi);
    ++rows;
  }
  CHECK(rows == expected_rows);
  std::filesystem::remove(path);
}

TEST_CASE("json documents round trip") {
  nlohmann::json doc;
  doc["name"] = "fit";
  doc["seed"] = 12345;
  doc["tau"] = {0.25, 1e-4};
  doc["nested"]["flag"] = true;
  const auto path = temp_file("doc.json");
  write_json(path.string(), doc);
  const nlohmann::json back = read_json(path.string());
  CHECK(back == doc);
  std::filesystem::remove(path);
}
