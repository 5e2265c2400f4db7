#ifndef LOGITMC_SYNTHETIC_HPP_
#define LOGITMC_SYNTHETIC_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "logitmc/error.hpp"
#include "logitmc/model.hpp"
#include "logitmc/random.hpp"

namespace logitmc {

enum class CovariateDesign {
  gaussian,  // intercept + standard normal covariates
  bank,      // intercept, previous-outcome failure/success indicators, standardized age, cellular indicator
};

struct SyntheticSpec {
  std::size_t n = 0;
  std::size_t l = 0;
  Vector true_beta;  // length l; entry 0 is the intercept and gets calibrated
  double sparsity_target = 0.5;
  std::uint64_t seed = 0;
  CovariateDesign design = CovariateDesign::gaussian;

  void validate() const {
    if (n < 1) throw ConfigError("synthetic n must be positive");
    if (l < 1) throw ConfigError("synthetic l must be positive");
    if (design == CovariateDesign::bank && l != 5) throw ConfigError("bank covariate design has exactly 5 coefficients");
    if (static_cast<std::size_t>(true_beta.size()) != l)
      throw ConfigError("true_beta has length " + std::to_string(true_beta.size()) + ", expected " + std::to_string(l));
    if (!(sparsity_target > 0.0 && sparsity_target < 1.0)) throw ConfigError("sparsity target must lie in (0, 1)");
  }
};

struct SyntheticData {
  Dataset data;
  Vector true_beta;  // with the calibrated intercept
  double realized_fraction = 0.0;
};

inline constexpr std::size_t kCalibrationSteps = 100;

// Covariates and uniforms are drawn once; y_i = [u_i < logistic(x_i beta)].
// The intercept is found by bisection so the realized success fraction hits
// the target; with the uniforms fixed the fraction is monotone in it.
inline SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto l = static_cast<Eigen::Index>(spec.l);
  Rng rng(spec.seed);
  std::normal_distribution<double> normal;
  RowMatrix X(n, l);
  std::vector<std::string> names;
  names.push_back("intercept");
  if (spec.design == CovariateDesign::gaussian) {
    for (Eigen::Index j = 1; j < l; ++j) names.push_back("x" + std::to_string(j));
    for (Eigen::Index i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      for (Eigen::Index j = 1; j < l; ++j) X(i, j) = normal(rng);
    }
  } else {
    names.insert(names.end(), {"failure", "success", "age", "cellular"});
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = uniform01(rng);
      X(i, 0) = 1.0;
      X(i, 1) = u >= 0.86 && u < 0.97 ? 1.0 : 0.0;
      X(i, 2) = u >= 0.97 ? 1.0 : 0.0;
      X(i, 3) = normal(rng);
      X(i, 4) = uniform01(rng) < 0.63 ? 1.0 : 0.0;
    }
  }
  std::vector<double> u(spec.n);
  for (auto& v : u) v = uniform01(rng);

  Vector beta = spec.true_beta;
  const Vector slope_part = X.rightCols(l - 1) * beta.tail(l - 1);
  auto fraction = [&](double intercept) {
    std::size_t ones = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (u[static_cast<std::size_t>(i)] < 1.0 / (1.0 + std::exp(-(intercept + slope_part[i])))) ++ones;
    return static_cast<double>(ones) / static_cast<double>(spec.n);
  };
  double lo = -50.0, hi = 50.0;
  double mid = 0.0, frac = fraction(mid);
  bool ok = false;
  for (std::size_t step = 0; step < kCalibrationSteps; ++step) {
    mid = 0.5 * (lo + hi);
    frac = fraction(mid);
    if (std::abs(frac - spec.sparsity_target) <= 0.2 * spec.sparsity_target * 0.05) {
      ok = true;
      break;
    }
    (frac < spec.sparsity_target ? lo : hi) = mid;
  }
  if (!ok && std::abs(frac - spec.sparsity_target) > 0.2 * spec.sparsity_target)
    throw NumericalError("intercept calibration did not reach the sparsity target after " +
                         std::to_string(kCalibrationSteps) + " bisection steps");
  beta[0] = mid;
  std::vector<std::uint8_t> y(spec.n);
  std::size_t ones = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool yi = u[static_cast<std::size_t>(i)] < 1.0 / (1.0 + std::exp(-(mid + slope_part[i])));
    y[static_cast<std::size_t>(i)] = yi ? 1 : 0;
    ones += yi;
  }
  SyntheticData out{Dataset(std::move(X), std::move(y), std::move(names)), beta,
                    static_cast<double>(ones) / static_cast<double>(spec.n)};
  return out;
}

// Default slopes: 0.5, -0.5, 0.25, ... alternating in sign and halving every two coefficients.
inline Vector default_true_beta(std::size_t l) {
  Vector b = Vector::Zero(static_cast<Eigen::Index>(l));
  for (std::size_t j = 1; j < l; ++j)
    b[static_cast<Eigen::Index>(j)] = (j % 2 ? 0.5 : -0.5) / std::pow(2.0, static_cast<double>((j - 1) / 2));
  return b;
}

}  // namespace logitmc

#endif  // LOGITMC_SYNTHETIC_HPP_
