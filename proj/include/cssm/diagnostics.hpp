#ifndef CSSM_DIAGNOSTICS_HPP
#define CSSM_DIAGNOSTICS_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cssm/types.hpp"

namespace cssm {

struct EssResult {
  double value = 0.0;
  bool degenerate = false;  // constant chain; value reported as N
};

// Effective sample size N / (1 + 2 sum rho_k), autocorrelations truncated by
// the initial-positive-sequence rule on consecutive-lag pairs.
EssResult ess(const Eigen::VectorXd& chain);

// Classic potential scale reduction factor over m >= 2 equal-length chains.
double gelman_rubin(const std::vector<Eigen::VectorXd>& chains);

// Shortest interval containing ceil(level * N) sorted samples.
std::pair<double, double> hpd(std::vector<double> samples, double level = 0.95);

// Fraction of columns whose HPD interval contains the matching truth entry.
double hpd_coverage(const Eigen::MatrixXd& samples, const Eigen::VectorXd& truth,
                    double level = 0.95);

// Formal stand-in for visual multimodality checks: kernel density estimate
// (Silverman bandwidth) with mode counting; a secondary mode counts when it
// rises at least `prominence_frac` of the peak density above the valley
// separating it from a taller mode.
bool is_multimodal(const std::vector<double>& samples,
                   double prominence_frac = 0.1);

enum class Verdict { kIdentifiable, kINE, kNI };

std::string verdict_name(Verdict v);

struct IdentifiabilityVerdict {
  int param = -1;
  Verdict verdict = Verdict::kINE;
  std::map<int, double> variance_ratio_by_r;  // r -> var(r) / var(1)
  bool multimodal = false;
  double sd_fraction_of_width = 0.0;  // posterior sd at r_max / prior width
  double ratio_threshold = 0.0;       // identifiable when ratio(r_max) <= this
  double sd_frac_threshold = 0.0;     // INE regime when sd fraction > this
};

// Data-cloning classification. Multimodal at max r -> NI; variance shrinking
// like 1/r (ratio <= identifiable_ratio_slack / r_max) -> identifiable;
// otherwise INE (flat or slowly concentrating posterior).
IdentifiabilityVerdict classify(const std::map<int, std::vector<double>>& samples_by_r,
                                double lower, double upper, int param_id,
                                double identifiable_ratio_slack = 2.0,
                                double ine_sd_frac = 0.25,
                                double prominence_frac = 0.1);

}  // namespace cssm

#endif  // CSSM_DIAGNOSTICS_HPP
