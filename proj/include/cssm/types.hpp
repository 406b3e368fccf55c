#ifndef CSSM_TYPES_HPP
#define CSSM_TYPES_HPP

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cssm {

inline constexpr int kNumStocks = 5;
inline constexpr int kNumParams = 11;

using Vec5 = Eigen::Matrix<double, kNumStocks, 1>;
using Mat5 = Eigen::Matrix<double, kNumStocks, kNumStocks>;
using ParameterVector = Eigen::Matrix<double, kNumParams, 1>;

// State vector ordering used throughout: (foliage, roots, wood, litter, som).
enum Stock : int {
  kFoliage = 0,
  kRoots = 1,
  kWood = 2,
  kLitter = 3,
  kSom = 4,
};

inline const std::array<std::string, kNumStocks>& stock_names() {
  static const std::array<std::string, kNumStocks> names = {"cf", "cr", "cw",
                                                            "clit", "csom"};
  return names;
}

// Process parameter indices. p1..p11 are the standard DALECev names; the
// enum gives them roles so call sites stay readable.
enum Param : int {
  kDecompRate = 0,        // p1, scaled daily litter decomposition rate
  kGppRespFrac = 1,       // p2, fraction of GPP respired
  kNppFoliageFrac = 2,    // p3, fraction of NPP allocated to foliage
  kNppRootFrac = 3,       // p4, fraction of remaining NPP allocated to roots
  kFoliageTurnover = 4,   // p5
  kWoodTurnover = 5,      // p6
  kRootTurnover = 6,      // p7
  kLitterMinRate = 7,     // p8, scaled daily mineralisation rate of litter
  kSomMinRate = 8,        // p9, daily mineralisation rate of SOM
  kTempDependence = 9,    // p10, degC^-1
  kNitrogenUse = 10,      // p11, nitrogen use efficiency
};

// Uniform prior bounds for the eleven process parameters.
inline const ParameterVector& param_lower_bounds() {
  static const ParameterVector lo =
      (ParameterVector() << 1.1e-5, 0.2, 0.01, 0.01, 1e-4, 1e-6, 1e-6, 1e-6,
       1e-6, 0.05, 2.0)
          .finished();
  return lo;
}

inline const ParameterVector& param_upper_bounds() {
  static const ParameterVector hi =
      (ParameterVector() << 0.11, 0.7, 0.5, 0.5, 0.1, 0.01, 0.01, 1.0, 0.01,
       0.2, 20.0)
          .finished();
  return hi;
}

inline bool params_in_bounds(const ParameterVector& p) {
  return (p.array() >= param_lower_bounds().array()).all() &&
         (p.array() <= param_upper_bounds().array()).all();
}

// Meteorological forcing for one day.
struct DriverRecord {
  int day = 0;               // strictly increasing day index, 1-based
  double t_max = 0.0;        // degC
  double t_min = 0.0;        // degC
  double t_mean = 0.0;       // degC
  double radiation = 0.0;    // MJ m-2 day-1
  double co2 = 400.0;        // ppm
  std::optional<double> gpp_override;  // gC m-2 day-1, used in override mode

  bool valid() const {
    return t_min <= t_mean && t_mean <= t_max && radiation >= 0.0 && co2 > 0.0;
  }
};

// Daily driver series covering days 1..T. drivers.at_day(t) is the record
// used by the transition from t-1 to t.
class DriverSeries {
 public:
  DriverSeries() = default;
  explicit DriverSeries(std::vector<DriverRecord> records)
      : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
      if (records_[i].day != static_cast<int>(i) + 1) {
        throw std::invalid_argument(
            "driver series must cover days 1..T consecutively");
      }
    }
  }

  int horizon() const { return static_cast<int>(records_.size()); }

  const DriverRecord& at_day(int t) const {
    if (t < 1 || t > horizon()) {
      throw std::out_of_range("driver day " + std::to_string(t) +
                              " outside 1.." + std::to_string(horizon()));
    }
    return records_[static_cast<std::size_t>(t - 1)];
  }

  const std::vector<DriverRecord>& records() const { return records_; }

 private:
  std::vector<DriverRecord> records_;
};

// The eleven DALECev fluxes plus the derived net fluxes, gC m-2 day-1.
struct FluxSet {
  double gpp = 0.0;
  double ra = 0.0;    // autotrophic respiration
  double af = 0.0;    // allocation to foliage
  double ar = 0.0;    // allocation to roots
  double aw = 0.0;    // allocation to wood
  double lf = 0.0;    // foliage turnover
  double lw = 0.0;    // wood turnover
  double lr = 0.0;    // root turnover
  double r_lit = 0.0; // heterotrophic respiration from litter
  double r_som = 0.0; // heterotrophic respiration from SOM
  double d_lit = 0.0; // litter decomposition into SOM
  double nee = 0.0;   // net ecosystem exchange
  double sr = 0.0;    // soil respiration
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cssm

#endif  // CSSM_TYPES_HPP
