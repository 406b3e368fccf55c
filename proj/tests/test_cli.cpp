#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const std::string& log = "/dev/null") {
  const std::string cmd =
      std::string(CSSM_CLI_PATH) + " " + args + " >" + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("cssm_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("help exits cleanly") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("simulate --help") == 0);
}

TEST_CASE("simulate then fit, rerun byte-identical") {
  TempDir dir("roundtrip");
  const std::string sim = dir.str() + "/sim";
  const std::string sim_args = "simulate --scenario monthly --horizon 365 "
                               "--replicates 1 --seed 5 --out " + sim;
  CHECK(run_cli(sim_args) == 0);
  const fs::path rep = fs::path(sim) / "monthly_all" / "rep_000";
  REQUIRE(fs::exists(rep / "obs.csv"));
  REQUIRE(fs::exists(rep / "truth.csv"));
  REQUIRE(fs::exists(rep / "manifest.json"));
  const std::string obs_once = slurp(rep / "obs.csv");

  const std::string sim2 = dir.str() + "/sim2";
  CHECK(run_cli("simulate --scenario monthly --horizon 365 --replicates 1 "
                "--seed 5 --out " + sim2) == 0);
  CHECK(slurp(fs::path(sim2) / "monthly_all" / "rep_000" / "obs.csv") ==
        obs_once);

  const std::string fit = dir.str() + "/fit";
  const std::string fit_args =
      "fit " + rep.string() + " --latent-step monthly --iterations 200 "
      "--burn-in 50 --init-mode truth_debug --seed 9 --out " + fit;
  CHECK(run_cli(fit_args) == 0);
  REQUIRE(fs::exists(fs::path(fit) / "chain_00.csv"));
  REQUIRE(fs::exists(fs::path(fit) / "diagnostics.json"));
  const std::string chain_once = slurp(fs::path(fit) / "chain_00.csv");

  const std::string fit2 = dir.str() + "/fit2";
  CHECK(run_cli("fit " + rep.string() + " --latent-step monthly "
                "--iterations 200 --burn-in 50 --init-mode truth_debug "
                "--seed 9 --out " + fit2) == 0);
  CHECK(slurp(fs::path(fit2) / "chain_00.csv") == chain_once);

  const std::string report = dir.str() + "/report";
  CHECK(run_cli("report " + fit + " --out " + report) == 0);
  CHECK(fs::exists(fs::path(report) / "ess_table.csv"));
  CHECK(fs::exists(fs::path(report) / "coverage_table.csv"));
}

TEST_CASE("missing driver file fails with the path in the message") {
  TempDir dir("nodriver");
  const fs::path log = dir.path / "log.txt";
  const int code = run_cli(
      "simulate --drivers /nonexistent/forcing.csv --out " + dir.str() + "/x",
      log.string());
  CHECK(code == 2);
  CHECK(slurp(log).find("/nonexistent/forcing.csv") != std::string::npos);
}

TEST_CASE("fit of a directory without observations fails") {
  TempDir dir("noobs");
  const fs::path empty = dir.path / "empty";
  fs::create_directories(empty);
  CHECK(run_cli("fit " + empty.string() + " --out " + dir.str() + "/out") == 2);
}

TEST_CASE("report with nothing to collect fails") {
  TempDir dir("noreport");
  CHECK(run_cli("report " + dir.str()) == 2);
}

TEST_CASE("unknown config keys are rejected") {
  TempDir dir("badconfig");
  const fs::path cfg = dir.path / "config.json";
  {
    std::ofstream out(cfg);
    out << "{\"fit\": {\"iterations\": 100, \"step_size\": 3}}\n";
  }
  const fs::path log = dir.path / "log.txt";
  const int code = run_cli(
      "simulate --config " + cfg.string() + " --out " + dir.str() + "/x",
      log.string());
  CHECK(code == 2);
  CHECK(slurp(log).find("step_size") != std::string::npos);
}

TEST_CASE("clone rejects a bad r list") {
  TempDir dir("badrlist");
  const std::string sim = dir.str() + "/sim";
  CHECK(run_cli("simulate --scenario annual --horizon 365 --seed 2 --out " +
                sim) == 0);
  const std::string rep = sim + "/annual_all/rep_000";
  CHECK(run_cli("clone " + rep + " --r-list 5,1 --iterations 20 --burn-in 5 "
                "--out " + dir.str() + "/out") == 2);
}
