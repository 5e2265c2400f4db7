#ifndef LOGITMC_SAMPLERS_HPP_
#define LOGITMC_SAMPLERS_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "logitmc/case_control.hpp"
#include "logitmc/chain.hpp"
#include "logitmc/model.hpp"
#include "logitmc/random.hpp"

namespace logitmc {

// How often the case-control subsample is re-drawn. every == 0 keeps one
// subsample for the whole chain.
struct RefreshSchedule {
  std::size_t every = 0;

  bool fixed() const noexcept { return every == 0; }
  std::string describe() const { return fixed() ? "fixed" : "every-" + std::to_string(every); }
};

// Approximate log posterior with an owned subsample that can be re-drawn on a
// schedule. Subsample k is drawn with derive_seed(chain_seed, "subsample", k).
// The minority-class rows and the current subsample are kept packed; values
// equal approx_log_posterior bitwise.
class CaseControlPosterior {
public:
  CaseControlPosterior(const Dataset& data, const PriorSpec& prior, CaseControlIndex index, std::size_t a,
                       RefreshSchedule schedule, std::uint64_t chain_seed, WorkerPool* pool)
      : data_(data), prior_(prior), index_(std::move(index)), a_(a), schedule_(schedule),
        chain_seed_(chain_seed), pool_(pool), sub_(draw_subsample(index_, a_, derive_seed(chain_seed, "subsample", 0))) {
    if (!sub_.exhaustive(index_)) {
      exact_rows_ = pack_rows(data_, index_.exact_rows());
      sampled_rows_ = pack_rows(data_, sub_.rows);
    }
  }

  double operator()(const Beta& beta) const {
    if (sub_.exhaustive(index_)) return approx_log_posterior(beta, data_, index_, sub_, prior_, pool_);
    check_dims(beta, data_);
    return detail::case_control_combine(packed_log_likelihood(beta, exact_rows_, pool_),
                                        packed_log_likelihood(beta, sampled_rows_, pool_), index_, sub_) +
           log_prior(beta, prior_);
  }

  bool refresh(std::size_t iteration) {
    if (schedule_.fixed() || iteration % schedule_.every != 0) return false;
    if (sub_.exhaustive(index_)) return false;
    ++draws_;
    sub_ = draw_subsample(index_, a_, derive_seed(chain_seed_, "subsample", draws_));
    sampled_rows_ = pack_rows(data_, sub_.rows);
    return true;
  }

  const CaseControlIndex& index() const noexcept { return index_; }
  const Subsample& subsample() const noexcept { return sub_; }
  std::size_t redraws() const noexcept { return draws_; }

  void describe(ChainOutput& out) const {
    out.meta["subsample_size"] = std::to_string(a_);
    out.meta["subsample_class"] = index_.swapped ? "1" : "0";
    out.meta["subsample_class_size"] = std::to_string(index_.sampled_count());
    out.meta["subsample_refresh"] = schedule_.describe();
    out.meta["subsample_redraws"] = std::to_string(draws_);
    out.meta["subsample_first_seed"] = std::to_string(derive_seed(chain_seed_, "subsample", 0));
    out.meta["class_swap"] = index_.swapped ? "true" : "false";
  }

private:
  const Dataset& data_;
  const PriorSpec& prior_;
  CaseControlIndex index_;
  std::size_t a_;
  RefreshSchedule schedule_;
  std::uint64_t chain_seed_;
  WorkerPool* pool_;
  Subsample sub_;
  PackedRows exact_rows_;
  PackedRows sampled_rows_;
  std::size_t draws_ = 0;
};

inline void check_model(const Dataset& data, const PriorSpec& prior, const ProposalSpec& proposal) {
  if (prior.dim() != data.cols())
    throw ConfigError("prior dimension " + std::to_string(prior.dim()) + " does not match " +
                      std::to_string(data.cols()) + " columns");
  if (proposal.dim() != data.cols())
    throw ConfigError("proposal dimension " + std::to_string(proposal.dim()) + " does not match " +
                      std::to_string(data.cols()) + " columns");
}

// Exact random-walk Metropolis on the logistic posterior. With a multi-worker
// pool this is the parallel-likelihood variant; the draws do not depend on the
// worker count.
inline ChainOutput mh_run(const Dataset& data, const PriorSpec& prior, const ProposalSpec& proposal,
                          const ChainConfig& config, WorkerPool* pool = nullptr) {
  check_model(data, prior, proposal);
  std::size_t evals = 0;
  auto target = [&](const Beta& b) { return exact_log_posterior(b, data, prior, pool).total; };
  ChainOutput out = metropolis(target, data.feature_names(), proposal, config, evals);
  out.exact_evals = evals;
  const std::size_t workers = pool ? pool->workers() : 1;
  out.method_tag = workers > 1 ? "parallel-mh" : "mh";
  out.meta["target"] = "exact";
  out.meta["workers"] = std::to_string(workers);
  return out;
}

// Metropolis run directly against the case-control approximate posterior. The
// chain does not target the exact posterior unless a equals the subsampled
// class size.
inline ChainOutput subsampling_mh_run(const Dataset& data, const PriorSpec& prior, const ProposalSpec& proposal,
                                      const ChainConfig& config, std::size_t a, RefreshSchedule refresh,
                                      WorkerPool* pool = nullptr) {
  check_model(data, prior, proposal);
  config.validate(data.cols());
  CaseControlPosterior approx(data, prior, build_index(data), a, refresh, config.seed, pool);
  std::size_t evals = 0;
  ChainOutput out = metropolis(approx, data.feature_names(), proposal, config, evals);
  out.approx_evals = evals;
  out.method_tag = "subsample";
  out.meta["target"] = approx.subsample().exhaustive(approx.index()) ? "exact" : "approximate";
  out.meta["workers"] = std::to_string(pool ? pool->workers() : 1);
  approx.describe(out);
  return out;
}

// Two-stage Metropolis: case-control screen, exact correction. Targets the exact posterior.
inline ChainOutput two_stage_mh_run(const Dataset& data, const PriorSpec& prior, const ProposalSpec& proposal,
                                    const ChainConfig& config, std::size_t a, RefreshSchedule refresh,
                                    WorkerPool* pool = nullptr) {
  check_model(data, prior, proposal);
  config.validate(data.cols());
  CaseControlPosterior approx(data, prior, build_index(data), a, refresh, config.seed, pool);
  auto exact = [&](const Beta& b) { return exact_log_posterior(b, data, prior, pool).total; };
  ChainOutput out = delayed_acceptance(approx, exact, data.feature_names(), proposal, config);
  out.method_tag = "two-stage";
  out.meta["target"] = "exact";
  out.meta["workers"] = std::to_string(pool ? pool->workers() : 1);
  approx.describe(out);
  return out;
}

struct PosteriorMode {
  Beta mode;
  Matrix covariance;  // inverse negative Hessian of the log posterior at the mode
  std::size_t newton_steps = 0;
};

// Newton iterations on the exact log posterior, used to shape proposals.
inline PosteriorMode find_posterior_mode(const Dataset& data, const PriorSpec& prior, std::size_t max_steps = 100,
                                         double tol = 1e-10) {
  const auto l = static_cast<Eigen::Index>(data.cols());
  const Matrix prior_precision = prior.weight() * prior.covariance().llt().solve(Matrix::Identity(l, l));
  const auto& X = data.X();
  PosteriorMode result;
  Beta beta = Beta::Zero(l);
  Matrix H(l, l);
  for (std::size_t step = 0; step < max_steps; ++step) {
    const Vector theta = X * beta;
    Vector grad = -prior_precision * beta;
    H = prior_precision;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double pi = 1.0 / (1.0 + std::exp(-theta[i]));
      const double w = pi * (1.0 - pi);
      grad += (static_cast<double>(data.y()[static_cast<std::size_t>(i)]) - pi) * X.row(i).transpose();
      H.noalias() += w * X.row(i).transpose() * X.row(i);
    }
    const Vector delta = H.ldlt().solve(grad);
    // Halve the step while the posterior decreases.
    double current = exact_log_posterior(beta, data, prior).total;
    double t = 1.0;
    Beta next = beta + delta;
    while (t > 1e-8 && !(exact_log_posterior(next, data, prior).total >= current)) {
      t *= 0.5;
      next = beta + t * delta;
    }
    beta = next;
    result.newton_steps = step + 1;
    if (delta.lpNorm<Eigen::Infinity>() * t < tol) break;
  }
  result.mode = beta;
  result.covariance = H.llt().solve(Matrix::Identity(l, l));
  return result;
}

// Random walk shaped by the Laplace covariance with the usual 2.38^2 / l scale.
inline ProposalSpec laplace_proposal(const Dataset& data, const PriorSpec& prior, bool adapt_burnin = true,
                                     double scale = -1.0) {
  const PosteriorMode m = find_posterior_mode(data, prior);
  const double s = scale > 0.0 ? scale : 2.38 * 2.38 / static_cast<double>(data.cols());
  Matrix cov = s * m.covariance;
  cov = 0.5 * (cov + cov.transpose()).eval();
  return ProposalSpec(cov, adapt_burnin);
}

}  // namespace logitmc

#endif  // LOGITMC_SAMPLERS_HPP_
