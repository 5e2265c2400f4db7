#ifndef LOGITMC_CHAIN_HPP_
#define LOGITMC_CHAIN_HPP_

#include <algorithm>
#include <chrono>
#include <concepts>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "logitmc/error.hpp"
#include "logitmc/model.hpp"
#include "logitmc/random.hpp"

namespace logitmc {

// Symmetric Gaussian random walk: beta' = beta + scale_factor * L z, L L^T = covariance.
// Symmetry means the proposal densities cancel from every acceptance ratio.
class ProposalSpec {
public:
  explicit ProposalSpec(Matrix covariance, bool adapt_burnin = false, double target_acceptance = 0.234)
      : cov_(std::move(covariance)), adapt_(adapt_burnin), target_(target_acceptance) {
    if (cov_.rows() < 1 || cov_.rows() != cov_.cols()) throw ConfigError("proposal covariance must be square");
    if (!(target_ > 0.05 && target_ < 0.95)) throw ConfigError("target acceptance must lie in (0.05, 0.95)");
    Eigen::LLT<Matrix> llt(cov_);
    if (!cov_.allFinite() || llt.info() != Eigen::Success)
      throw ConfigError("proposal covariance is not positive definite");
    chol_ = llt.matrixL();
  }

  static ProposalSpec isotropic(std::size_t dim, double variance, bool adapt_burnin = false) {
    const auto d = static_cast<Eigen::Index>(dim);
    return ProposalSpec(Matrix::Identity(d, d) * variance, adapt_burnin);
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(cov_.rows()); }
  const Matrix& covariance() const noexcept { return cov_; }
  const Matrix& cholesky() const noexcept { return chol_; }
  bool adapt_burnin() const noexcept { return adapt_; }
  double target_acceptance() const noexcept { return target_; }

private:
  Matrix cov_;
  Matrix chol_;
  bool adapt_;
  double target_;
};

inline Beta propose(const Beta& current, const ProposalSpec& spec, Rng& rng, double scale_factor = 1.0) {
  std::normal_distribution<double> normal;
  Vector z(current.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = normal(rng);
  return current + scale_factor * (spec.cholesky() * z);
}

struct ChainConfig {
  std::size_t iterations = 0;
  std::size_t burnin = 0;
  std::size_t thinning = 1;
  std::uint64_t seed = 0;
  std::optional<Beta> init;

  std::size_t kept() const noexcept { return iterations > burnin ? (iterations - burnin) / thinning : 0; }

  void validate(std::size_t dim) const {
    if (iterations == 0) throw ConfigError("iterations must be positive");
    if (burnin >= iterations) throw ConfigError("burn-in must be smaller than the iteration count");
    if (thinning < 1) throw ConfigError("thinning must be at least 1");
    if (init && static_cast<std::size_t>(init->size()) != dim)
      throw ConfigError("initial value has length " + std::to_string(init->size()) + ", model has " +
                        std::to_string(dim) + " coefficients");
    if (init && !init->allFinite()) throw ConfigError("initial value is not finite");
  }
};

struct ChainOutput {
  Matrix draws;  // kept draws x coefficients
  std::vector<std::string> names;
  std::size_t iterations = 0;
  std::size_t stage1_proposals = 0;
  std::size_t stage1_promotions = 0;
  std::size_t stage2_accepts = 0;
  double stage2_prob_sum = 0.0;  // sum of stage-2 acceptance probabilities over promotions
  std::size_t exact_evals = 0;
  std::size_t approx_evals = 0;
  double wall_seconds = 0.0;
  std::string method_tag;
  std::map<std::string, std::string> meta;

  std::size_t kept() const noexcept { return static_cast<std::size_t>(draws.rows()); }
  double acceptance_rate() const noexcept {
    return stage1_proposals ? static_cast<double>(stage2_accepts) / static_cast<double>(stage1_proposals) : 0.0;
  }
  double promotion_rate() const noexcept {
    return stage1_proposals ? static_cast<double>(stage1_promotions) / static_cast<double>(stage1_proposals) : 0.0;
  }
  // Mean stage-2 acceptance probability among promoted proposals.
  double stage2_mean_probability() const noexcept {
    return stage1_promotions ? stage2_prob_sum / static_cast<double>(stage1_promotions) : 0.0;
  }
  double stage2_acceptance_rate() const noexcept {
    return stage1_promotions ? static_cast<double>(stage2_accepts) / static_cast<double>(stage1_promotions) : 0.0;
  }
  double iterations_per_second() const noexcept {
    return wall_seconds > 0.0 ? static_cast<double>(iterations) / wall_seconds : 0.0;
  }
};

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// min(0, x) that keeps NaN as NaN (std::min would turn it into 0).
inline double log_min0(double x) { return std::isnan(x) ? x : std::min(0.0, x); }

// Stage-2 log acceptance probability of the two-stage kernel in its closed form
//   min(0, [screen(cur) + exact(new)] - [screen(new) + exact(cur)]).
// The proposal-kernel integral of the general expression never has to be computed.
inline double two_stage_log_acceptance(double screen_current, double exact_current, double screen_candidate,
                                       double exact_candidate) {
  return log_min0((screen_current + exact_candidate) - (screen_candidate + exact_current));
}

// Ties (log ratio exactly 0) and positive ratios accept without consuming a uniform.
inline bool accept_log(double log_ratio, Rng& rng) {
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(uniform01(rng)) < log_ratio;
}

// Burn-in-only Robbins-Monro adaptation of the proposal scale factor.
class ScaleAdapter {
public:
  ScaleAdapter(const ProposalSpec& spec, std::size_t burnin) : enabled_(spec.adapt_burnin()), burnin_(burnin),
                                                                target_(spec.target_acceptance()) {}

  double factor() const noexcept { return std::exp(log_scale_); }

  void update(std::size_t iteration, bool accepted) {
    if (!enabled_ || iteration > burnin_) return;
    const double gain = 1.0 / std::pow(static_cast<double>(iteration) + 1.0, 0.6);
    log_scale_ += gain * ((accepted ? 1.0 : 0.0) - target_);
    log_scale_ = std::clamp(log_scale_, -20.0, 20.0);
  }

private:
  bool enabled_;
  std::size_t burnin_;
  double target_;
  double log_scale_ = 0.0;
};

class DrawRecorder {
public:
  DrawRecorder(const ChainConfig& config, std::size_t dim)
      : burnin_(config.burnin), thinning_(config.thinning),
        draws_(static_cast<Eigen::Index>(config.kept()), static_cast<Eigen::Index>(dim)) {}

  void record(std::size_t iteration, const Beta& state) {
    if (iteration <= burnin_ || (iteration - burnin_) % thinning_ != 0) return;
    draws_.row(next_++) = state.transpose();
  }

  Matrix take() { return std::move(draws_); }

private:
  std::size_t burnin_;
  std::size_t thinning_;
  Matrix draws_;
  Eigen::Index next_ = 0;
};

template <class T>
concept Refreshable = requires(T t, std::size_t k) {
  { t.refresh(k) } -> std::convertible_to<bool>;
};

template <class Target>
bool maybe_refresh(Target& target, std::size_t iteration) {
  if constexpr (Refreshable<Target>) return target.refresh(iteration);
  else return false;
}

inline void finish_meta(ChainOutput& out, const ChainConfig& config, const ScaleAdapter& adapter) {
  out.meta["seed"] = std::to_string(config.seed);
  out.meta["burnin"] = std::to_string(config.burnin);
  out.meta["thinning"] = std::to_string(config.thinning);
  out.meta["proposal_scale_factor"] = format_double(adapter.factor());
}

}  // namespace detail

// Random-walk Metropolis on an arbitrary log density. `target(beta)` returns the
// log density (possibly -inf). Targets exposing `bool refresh(iteration)` are
// given the chance to change before each iteration; the cached value of the
// current state is recomputed when they do. `target_evals` receives the number
// of target evaluations.
template <class Target>
ChainOutput metropolis(Target&& target, const std::vector<std::string>& names, const ProposalSpec& proposal,
                       const ChainConfig& config, std::size_t& target_evals) {
  const std::size_t dim = proposal.dim();
  config.validate(dim);
  if (names.size() != dim) throw ConfigError("coefficient name count does not match proposal dimension");

  const auto start = std::chrono::steady_clock::now();
  Rng rng(config.seed);
  detail::ScaleAdapter adapter(proposal, config.burnin);
  detail::DrawRecorder recorder(config, dim);

  Beta current = config.init ? *config.init : Beta::Zero(static_cast<Eigen::Index>(dim));
  double current_lp = target(current);
  target_evals = 1;
  if (!std::isfinite(current_lp))
    throw NumericalError("log target is not finite at the initial state");

  ChainOutput out;
  out.names = names;
  out.iterations = config.iterations;
  for (std::size_t t = 1; t <= config.iterations; ++t) {
    if (detail::maybe_refresh(target, t)) {
      current_lp = target(current);
      ++target_evals;
    }
    const Beta candidate = propose(current, proposal, rng, adapter.factor());
    const double candidate_lp = target(candidate);
    ++target_evals;
    const double log_h = detail::log_min0(candidate_lp - current_lp);
    ++out.stage1_proposals;
    ++out.stage1_promotions;
    out.stage2_prob_sum += std::isnan(log_h) ? 0.0 : std::exp(log_h);
    const bool accepted = detail::accept_log(log_h, rng);
    if (accepted) {
      current = candidate;
      current_lp = candidate_lp;
      ++out.stage2_accepts;
    }
    adapter.update(t, accepted);
    recorder.record(t, current);
  }
  out.draws = recorder.take();
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  detail::finish_meta(out, config, adapter);
  return out;
}

// Two-stage (delayed-acceptance) Metropolis. Stage 1 screens a random-walk
// proposal against the cheap log density `screen`; only promoted proposals are
// evaluated under the expensive `exact` log density, and stage 2 accepts with
//   log rho = min(0, [screen(cur) + exact(new)] - [screen(new) + exact(cur)]).
// The chain leaves the `exact` density invariant. Refreshable screens are
// handled as in metropolis(); a refresh costs one screen evaluation.
template <class Screen, class Exact>
ChainOutput delayed_acceptance(Screen&& screen, Exact&& exact, const std::vector<std::string>& names,
                               const ProposalSpec& proposal, const ChainConfig& config) {
  const std::size_t dim = proposal.dim();
  config.validate(dim);
  if (names.size() != dim) throw ConfigError("coefficient name count does not match proposal dimension");

  const auto start = std::chrono::steady_clock::now();
  Rng rng(config.seed);
  detail::ScaleAdapter adapter(proposal, config.burnin);
  detail::DrawRecorder recorder(config, dim);

  ChainOutput out;
  out.names = names;
  out.iterations = config.iterations;

  Beta current = config.init ? *config.init : Beta::Zero(static_cast<Eigen::Index>(dim));
  double current_screen = screen(current);
  ++out.approx_evals;
  if (!std::isfinite(current_screen))
    throw NumericalError("approximate log posterior is not finite at the initial state");
  double current_exact = exact(current);
  ++out.exact_evals;
  if (!std::isfinite(current_exact)) throw NumericalError("log posterior is not finite at the initial state");

  for (std::size_t t = 1; t <= config.iterations; ++t) {
    if (detail::maybe_refresh(screen, t)) {
      current_screen = screen(current);
      ++out.approx_evals;
    }
    const Beta candidate = propose(current, proposal, rng, adapter.factor());
    const double candidate_screen = screen(candidate);
    ++out.approx_evals;
    ++out.stage1_proposals;
    bool accepted = false;
    if (detail::accept_log(detail::log_min0(candidate_screen - current_screen), rng)) {
      ++out.stage1_promotions;
      const double candidate_exact = exact(candidate);
      ++out.exact_evals;
      const double log_rho =
          detail::two_stage_log_acceptance(current_screen, current_exact, candidate_screen, candidate_exact);
      out.stage2_prob_sum += std::isnan(log_rho) ? 0.0 : std::exp(log_rho);
      if (detail::accept_log(log_rho, rng)) {
        accepted = true;
        current = candidate;
        current_screen = candidate_screen;
        current_exact = candidate_exact;
        ++out.stage2_accepts;
      }
    }
    adapter.update(t, accepted);
    recorder.record(t, current);
  }
  out.draws = recorder.take();
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  detail::finish_meta(out, config, adapter);
  return out;
}

}  // namespace logitmc

#endif  // LOGITMC_CHAIN_HPP_
