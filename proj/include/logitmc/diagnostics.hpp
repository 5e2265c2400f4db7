#ifndef LOGITMC_DIAGNOSTICS_HPP_
#define LOGITMC_DIAGNOSTICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "logitmc/chain.hpp"
#include "logitmc/error.hpp"

namespace logitmc {

// Effective sample size by Geyer's initial positive sequence estimator:
// autocorrelations are summed in adjacent pairs until a pair sum turns
// non-positive.
inline double effective_sample_size(const Eigen::Ref<const Vector>& draws) {
  const auto n = draws.size();
  if (n < 100) throw NumericalError("effective sample size needs at least 100 draws, got " + std::to_string(n));
  const Vector centered = draws.array() - draws.mean();
  const double nd = static_cast<double>(n);
  auto autocov = [&](Eigen::Index lag) {
    return centered.head(n - lag).dot(centered.tail(n - lag)) / nd;
  };
  const double gamma0 = autocov(0);
  if (!(gamma0 > 0.0)) throw NumericalError("effective sample size undefined for a constant chain");
  double tau = -1.0;
  for (Eigen::Index m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (autocov(2 * m) + autocov(2 * m + 1)) / gamma0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / nd);
  return std::min(nd, nd / tau);
}

// Linear-interpolation quantile (type 7) of an unsorted sample.
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw NumericalError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct CoefficientSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  double ess = 0.0;
  double mcse = 0.0;
};

struct SummaryReport {
  std::string method;
  std::vector<CoefficientSummary> coefficients;
  std::size_t kept = 0;
  std::size_t iterations = 0;
  double acceptance_rate = 0.0;
  double promotion_rate = 0.0;
  double stage2_acceptance_rate = 0.0;
  double stage2_mean_probability = 0.0;
  std::size_t exact_evals = 0;
  std::size_t approx_evals = 0;
  double wall_seconds = 0.0;
  double iterations_per_second = 0.0;
};

inline CoefficientSummary summarize_column(const std::string& name, const Eigen::Ref<const Vector>& col) {
  CoefficientSummary s;
  s.name = name;
  const auto n = col.size();
  if (n < 2) throw NumericalError("summary needs at least two draws");
  s.mean = col.mean();
  s.sd = std::sqrt((col.array() - s.mean).square().sum() / static_cast<double>(n - 1));
  std::vector<double> v(col.data(), col.data() + n);
  s.q025 = quantile(v, 0.025);
  s.q50 = quantile(v, 0.5);
  s.q975 = quantile(v, 0.975);
  if (s.sd > 0.0 && n >= 100) {
    s.ess = effective_sample_size(col);
    s.mcse = s.sd / std::sqrt(s.ess);
  } else {
    s.ess = std::numeric_limits<double>::quiet_NaN();
    s.mcse = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

inline SummaryReport summarize(const ChainOutput& chain) {
  SummaryReport r;
  r.method = chain.method_tag;
  r.kept = chain.kept();
  for (Eigen::Index j = 0; j < chain.draws.cols(); ++j) {
    const Vector col = chain.draws.col(j);
    r.coefficients.push_back(summarize_column(chain.names[static_cast<std::size_t>(j)], col));
  }
  r.iterations = chain.iterations;
  r.acceptance_rate = chain.acceptance_rate();
  r.promotion_rate = chain.promotion_rate();
  r.stage2_acceptance_rate = chain.stage2_acceptance_rate();
  r.stage2_mean_probability = chain.stage2_mean_probability();
  r.exact_evals = chain.exact_evals;
  r.approx_evals = chain.approx_evals;
  r.wall_seconds = chain.wall_seconds;
  r.iterations_per_second = chain.iterations_per_second();
  return r;
}

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw NumericalError("KS statistic of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline double ks_statistic(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  return ks_statistic(std::vector<double>(a.data(), a.data() + a.size()),
                      std::vector<double>(b.data(), b.data() + b.size()));
}

// Asymptotic two-sample critical value c(alpha) * sqrt((n + m) / (n m)).
inline double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nd = static_cast<double>(n), md = static_cast<double>(m);
  return c * std::sqrt((nd + md) / (nd * md));
}

// Binned densities over shared edges; one density column per sample.
struct DensityTable {
  std::vector<double> edges;                 // bins + 1
  std::vector<std::vector<double>> density;  // [sample][bin]
};

inline DensityTable binned_density(const std::vector<std::vector<double>>& samples, std::size_t bins) {
  if (bins < 1) throw ConfigError("density needs at least one bin");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : samples)
    for (double v : s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!std::isfinite(lo)) throw NumericalError("density of empty samples");
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  DensityTable t;
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t k = 0; k <= bins; ++k) t.edges.push_back(lo + width * static_cast<double>(k));
  t.edges.back() = hi;
  for (const auto& s : samples) {
    std::vector<double> counts(bins, 0.0);
    for (double v : s) {
      auto k = static_cast<std::size_t>((v - lo) / width);
      counts[std::min(k, bins - 1)] += 1.0;
    }
    for (auto& c : counts) c /= static_cast<double>(s.size()) * width;
    t.density.push_back(std::move(counts));
  }
  return t;
}

}  // namespace logitmc

#endif  // LOGITMC_DIAGNOSTICS_HPP_
