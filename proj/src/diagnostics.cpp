#include "cssm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cssm {

EssResult ess(const Eigen::VectorXd& chain) {
  const int n = static_cast<int>(chain.size());
  if (n < 10) throw ConfigError("ess needs a chain of length >= 10");

  const double mean = chain.mean();
  Eigen::VectorXd centered = chain.array() - mean;
  const double gamma0 = centered.squaredNorm() / n;
  if (!(gamma0 > 0.0)) {
    return {static_cast<double>(n), true};
  }

  auto gamma = [&](int k) {
    double acc = 0.0;
    for (int t = 0; t + k < n; ++t) acc += centered[t] * centered[t + k];
    return acc / n;
  };

  // Initial positive sequence: sum pair sums gamma_{2m} + gamma_{2m+1} while
  // they stay positive.
  double sigma2 = -gamma0;
  for (int m = 0; 2 * m + 1 < n; ++m) {
    const double pair = gamma(2 * m) + gamma(2 * m + 1);
    if (pair <= 0.0) break;
    sigma2 += 2.0 * pair;
  }
  sigma2 = std::max(sigma2, gamma0 / n);  // keep the estimate usable

  double value = n * gamma0 / sigma2;
  value = std::min(value, static_cast<double>(n));
  value = std::max(value, 1e-12);
  return {value, false};
}

double gelman_rubin(const std::vector<Eigen::VectorXd>& chains) {
  const int m = static_cast<int>(chains.size());
  if (m < 2) throw ConfigError("gelman_rubin needs at least two chains");
  const int n = static_cast<int>(chains.front().size());
  if (n < 10) throw ConfigError("gelman_rubin needs chains of length >= 10");
  for (const auto& c : chains) {
    if (c.size() != n) throw ConfigError("gelman_rubin chains must share length");
  }

  Eigen::VectorXd means(m);
  Eigen::VectorXd vars(m);
  for (int j = 0; j < m; ++j) {
    means[j] = chains[j].mean();
    vars[j] = (chains[j].array() - means[j]).square().sum() / (n - 1);
  }
  const double w = vars.mean();
  if (!(w > 0.0)) throw NumericError("gelman_rubin: zero within-chain variance");
  const double grand = means.mean();
  const double b =
      (means.array() - grand).square().sum() * n / (m - 1);
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

std::pair<double, double> hpd(std::vector<double> samples, double level) {
  if (samples.empty()) throw ConfigError("hpd needs samples");
  if (!(level > 0.0 && level <= 1.0)) throw ConfigError("hpd level in (0, 1]");
  std::sort(samples.begin(), samples.end());
  const int n = static_cast<int>(samples.size());
  int k = static_cast<int>(std::ceil(level * n));
  k = std::min(std::max(k, 1), n);

  double best_lo = samples.front(), best_hi = samples.back();
  double best_width = best_hi - best_lo;
  for (int i = 0; i + k - 1 < n; ++i) {
    const double width = samples[i + k - 1] - samples[i];
    if (width < best_width) {
      best_width = width;
      best_lo = samples[i];
      best_hi = samples[i + k - 1];
    }
  }
  return {best_lo, best_hi};
}

double hpd_coverage(const Eigen::MatrixXd& samples, const Eigen::VectorXd& truth,
                    double level) {
  if (samples.cols() != truth.size()) {
    throw ConfigError("hpd_coverage: truth length must match sample columns");
  }
  if (samples.cols() == 0) return 1.0;
  int hits = 0;
  std::vector<double> column(samples.rows());
  for (int j = 0; j < samples.cols(); ++j) {
    for (int i = 0; i < samples.rows(); ++i) column[i] = samples(i, j);
    const auto [lo, hi] = hpd(column, level);
    if (truth[j] >= lo && truth[j] <= hi) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.cols());
}

bool is_multimodal(const std::vector<double>& samples, double prominence_frac) {
  const int n = static_cast<int>(samples.size());
  if (n < 100) return false;

  std::vector<double> x = samples;
  std::sort(x.begin(), x.end());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= (n - 1);
  const double sd = std::sqrt(var);
  const double iqr = x[static_cast<int>(0.75 * (n - 1))] -
                     x[static_cast<int>(0.25 * (n - 1))];
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  if (!(spread > 0.0)) return false;  // constant chain

  const double h = 0.9 * spread * std::pow(n, -0.2);
  const int kGrid = 512;
  const double lo = x.front() - 3.0 * h;
  const double hi = x.back() + 3.0 * h;
  const double dx = (hi - lo) / (kGrid - 1);

  // Bin the samples, then smooth with a truncated Gaussian kernel.
  std::vector<double> bins(kGrid, 0.0);
  for (double v : x) {
    int b = static_cast<int>((v - lo) / dx + 0.5);
    b = std::clamp(b, 0, kGrid - 1);
    bins[b] += 1.0;
  }
  const int halfspan = std::min(kGrid - 1, static_cast<int>(4.0 * h / dx) + 1);
  std::vector<double> kernel(halfspan + 1);
  for (int k = 0; k <= halfspan; ++k) {
    const double u = k * dx / h;
    kernel[k] = std::exp(-0.5 * u * u);
  }
  std::vector<double> dens(kGrid, 0.0);
  for (int i = 0; i < kGrid; ++i) {
    if (bins[i] == 0.0) continue;
    for (int k = -halfspan; k <= halfspan; ++k) {
      const int j = i + k;
      if (j < 0 || j >= kGrid) continue;
      dens[j] += bins[i] * kernel[std::abs(k)];
    }
  }

  // Local maxima (plateau-tolerant: up before, strictly down after).
  std::vector<int> peaks;
  for (int i = 0; i < kGrid; ++i) {
    const double left = (i > 0) ? dens[i - 1] : -1.0;
    const double right = (i + 1 < kGrid) ? dens[i + 1] : -1.0;
    if (dens[i] > left && dens[i] >= right) peaks.push_back(i);
  }
  if (peaks.size() < 2) return false;

  const int top =
      *std::max_element(peaks.begin(), peaks.end(),
                        [&](int a, int b) { return dens[a] < dens[b]; });
  const double peak_height = dens[top];

  for (int pk : peaks) {
    if (pk == top) continue;
    const int a = std::min(pk, top), b = std::max(pk, top);
    double valley = dens[a];
    for (int i = a; i <= b; ++i) valley = std::min(valley, dens[i]);
    if (dens[pk] - valley >= prominence_frac * peak_height) return true;
  }
  return false;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kIdentifiable: return "identifiable";
    case Verdict::kINE: return "INE";
    case Verdict::kNI: return "NI";
  }
  return "INE";
}

IdentifiabilityVerdict classify(const std::map<int, std::vector<double>>& samples_by_r,
                                double lower, double upper, int param_id,
                                double identifiable_ratio_slack,
                                double ine_sd_frac, double prominence_frac) {
  if (samples_by_r.size() < 2 || samples_by_r.count(1) == 0) {
    throw ConfigError("classify needs samples at r = 1 and at least one more r");
  }
  const double width = upper - lower;
  if (!(width > 0.0)) throw ConfigError("classify: invalid prior bounds");

  auto variance = [](const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / std::max(1.0, n - 1.0);
  };

  IdentifiabilityVerdict out;
  out.param = param_id;
  const double var1 = variance(samples_by_r.at(1));
  const int r_max = samples_by_r.rbegin()->first;
  const std::vector<double>& at_max = samples_by_r.rbegin()->second;

  for (const auto& [r, samples] : samples_by_r) {
    out.variance_ratio_by_r[r] =
        var1 > 0.0 ? variance(samples) / var1 : 1.0;
  }
  out.multimodal = is_multimodal(at_max, prominence_frac);
  out.sd_fraction_of_width = std::sqrt(variance(at_max)) / width;
  out.ratio_threshold = identifiable_ratio_slack / r_max;
  out.sd_frac_threshold = ine_sd_frac;

  if (out.multimodal) {
    out.verdict = Verdict::kNI;
  } else if (out.variance_ratio_by_r.at(r_max) <= out.ratio_threshold) {
    out.verdict = Verdict::kIdentifiable;
  } else {
    // Unimodal but not concentrating at the 1/r cloning rate: not estimable
    // from this data. The sd fraction shows how flat the posterior stayed.
    out.verdict = Verdict::kINE;
  }
  return out;
}

}  // namespace cssm
