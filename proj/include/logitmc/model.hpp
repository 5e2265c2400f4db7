#ifndef LOGITMC_MODEL_HPP_
#define LOGITMC_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "logitmc/error.hpp"
#include "logitmc/parallel.hpp"

namespace logitmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Beta = Eigen::VectorXd;

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
};

// Design matrix plus binary responses. Immutable after construction; the
// constructor enforces the invariants so every Dataset in the program is valid.
class Dataset {
public:
  Dataset(RowMatrix X, std::vector<std::uint8_t> y, std::vector<std::string> feature_names = {})
      : X_(std::move(X)), y_(std::move(y)), names_(std::move(feature_names)) {
    if (X_.rows() < 1 || X_.cols() < 1)
      throw DataError("dataset must have at least one row and one column");
    if (static_cast<std::size_t>(X_.rows()) != y_.size())
      throw DataError("design matrix has " + std::to_string(X_.rows()) + " rows but " +
                      std::to_string(y_.size()) + " responses");
    for (std::size_t i = 0; i < y_.size(); ++i)
      if (y_[i] > 1) throw DataError("response at row " + std::to_string(i) + " is not 0 or 1");
    if (!X_.allFinite()) throw DataError("design matrix contains non-finite values");
    if (names_.empty()) {
      for (Eigen::Index j = 0; j < X_.cols(); ++j) names_.push_back("b" + std::to_string(j));
    } else if (names_.size() != static_cast<std::size_t>(X_.cols())) {
      throw DataError("feature name count does not match column count");
    }
  }

  std::size_t rows() const noexcept { return y_.size(); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(X_.cols()); }
  const RowMatrix& X() const noexcept { return X_; }
  const std::vector<std::uint8_t>& y() const noexcept { return y_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }

  // Copy of the listed rows, in the given order.
  Dataset select(const std::vector<std::size_t>& rows) const {
    RowMatrix X(static_cast<Eigen::Index>(rows.size()), X_.cols());
    std::vector<std::uint8_t> y(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      X.row(static_cast<Eigen::Index>(k)) = X_.row(static_cast<Eigen::Index>(rows[k]));
      y[k] = y_[rows[k]];
    }
    return Dataset(std::move(X), std::move(y), names_);
  }

private:
  RowMatrix X_;
  std::vector<std::uint8_t> y_;
  std::vector<std::string> names_;
};

// Zero-mean Gaussian prior N(0, covariance) raised to the power `weight`.
class PriorSpec {
public:
  PriorSpec(Matrix covariance, double weight = 1.0)
      : cov_(std::move(covariance)), weight_(weight) {
    if (cov_.rows() < 1 || cov_.rows() != cov_.cols())
      throw ConfigError("prior covariance must be a non-empty square matrix");
    if (!cov_.allFinite()) throw ConfigError("prior covariance contains non-finite values");
    if (!cov_.isApprox(cov_.transpose(), 1e-12))
      throw ConfigError("prior covariance is not symmetric");
    if (!(weight_ > 0.0 && weight_ <= 1.0))
      throw ConfigError("prior weight must lie in (0, 1]");
    llt_.compute(cov_);
    if (llt_.info() != Eigen::Success) throw ConfigError("prior covariance is not positive definite");
    const auto L = llt_.matrixL();
    double logdet = 0.0;
    for (Eigen::Index j = 0; j < cov_.rows(); ++j) logdet += 2.0 * std::log(L(j, j));
    log_norm_ = -0.5 * (static_cast<double>(cov_.rows()) * std::log(2.0 * std::numbers::pi) + logdet);
  }

  static PriorSpec isotropic(std::size_t dim, double variance, double weight = 1.0) {
    return PriorSpec(Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)) * variance,
                     weight);
  }

  // A nonzero prior mean is never supported.
  static PriorSpec with_mean(const Vector& mean, Matrix covariance, double weight = 1.0) {
    if (mean.size() > 0 && !mean.isZero(0.0))
      throw ConfigError("prior mean must be the zero vector");
    return PriorSpec(std::move(covariance), weight);
  }

  PriorSpec reweighted(double weight) const { return PriorSpec(cov_, weight); }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(cov_.rows()); }
  const Matrix& covariance() const noexcept { return cov_; }
  double weight() const noexcept { return weight_; }

  // weight * log N(beta; 0, covariance), normalizing constant included.
  double log_density(const Beta& beta) const {
    if (static_cast<std::size_t>(beta.size()) != dim())
      throw DataError("beta has length " + std::to_string(beta.size()) + ", prior expects " +
                      std::to_string(dim()));
    const Vector z = llt_.matrixL().solve(beta);
    return weight_ * (log_norm_ - 0.5 * z.squaredNorm());
  }

private:
  Matrix cov_;
  double weight_;
  Eigen::LLT<Matrix> llt_;
  double log_norm_ = 0.0;
};

struct LogPosteriorValue {
  double log_likelihood = 0.0;
  double log_prior = 0.0;
  double total = 0.0;
};

// log(1 + e^t) without overflow.
inline double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

// Log-likelihood contribution of one observation with linear predictor theta.
inline double bernoulli_logit_term(double theta, std::uint8_t y) {
  return (y ? theta : 0.0) - softplus(theta);
}

inline void check_dims(const Beta& beta, const Dataset& data) {
  if (static_cast<std::size_t>(beta.size()) != data.cols())
    throw DataError("beta has length " + std::to_string(beta.size()) + ", dataset has " +
                    std::to_string(data.cols()) + " columns");
}

inline Vector linear_predictor(const Beta& beta, const Dataset& data, RowRange rows) {
  check_dims(beta, data);
  if (rows.begin > rows.end || rows.end > data.rows())
    throw DataError("row range [" + std::to_string(rows.begin) + ", " + std::to_string(rows.end) +
                    ") outside dataset of " + std::to_string(data.rows()) + " rows");
  return data.X().middleRows(static_cast<Eigen::Index>(rows.begin),
                             static_cast<Eigen::Index>(rows.size())) *
         beta;
}

inline Vector linear_predictor(const Beta& beta, const Dataset& data) {
  return linear_predictor(beta, data, {0, data.rows()});
}

namespace detail {

// Log-likelihood terms of one reduction block of (X, y). `source` maps a row
// of X to the row number reported when a term is not finite.
template <class Source>
double dense_block_sum(const Beta& beta, const RowMatrix& X, const std::vector<std::uint8_t>& y, std::size_t block,
                       Source&& source) {
  const std::size_t begin = block * kReductionBlock;
  const std::size_t end = std::min(y.size(), begin + kReductionBlock);
  const Vector theta = X.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) * beta;
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double term = bernoulli_logit_term(theta[static_cast<Eigen::Index>(i - begin)], y[i]);
    if (!std::isfinite(term)) throw NonFiniteTermError(source(i), term);
    sum += term;
  }
  return sum;
}

inline double block_log_likelihood(const Beta& beta, const Dataset& data, std::size_t block) {
  return dense_block_sum(beta, data.X(), data.y(), block, [](std::size_t i) { return i; });
}

}  // namespace detail

// Exact logistic log-likelihood. The result is bitwise independent of the
// pool's worker count.
inline double exact_log_likelihood(const Beta& beta, const Dataset& data, WorkerPool* pool = nullptr) {
  check_dims(beta, data);
  return ordered_block_reduce(
      block_count(data.rows()),
      [&](std::size_t b) { return detail::block_log_likelihood(beta, data, b); }, pool);
}

inline double log_prior(const Beta& beta, const PriorSpec& prior) { return prior.log_density(beta); }

inline LogPosteriorValue exact_log_posterior(const Beta& beta, const Dataset& data, const PriorSpec& prior,
                                             WorkerPool* pool = nullptr) {
  LogPosteriorValue v;
  v.log_likelihood = exact_log_likelihood(beta, data, pool);
  v.log_prior = log_prior(beta, prior);
  v.total = v.log_likelihood + v.log_prior;
  return v;
}

}  // namespace logitmc

#endif  // LOGITMC_MODEL_HPP_
