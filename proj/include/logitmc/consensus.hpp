#ifndef LOGITMC_CONSENSUS_HPP_
#define LOGITMC_CONSENSUS_HPP_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "logitmc/case_control.hpp"
#include "logitmc/chain.hpp"
#include "logitmc/error.hpp"
#include "logitmc/model.hpp"
#include "logitmc/random.hpp"
#include "logitmc/samplers.hpp"

namespace logitmc {

struct PartitionPlan {
  std::size_t p = 1;
  std::vector<std::size_t> assignment;  // partition id per row
  std::uint64_t seed = 0;

  // Rows of partition k in ascending order.
  std::vector<std::size_t> rows_of(std::size_t k) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == k) rows.push_back(i);
    return rows;
  }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(p, 0);
    for (auto id : assignment) ++s[id];
    return s;
  }
};

// Balanced uniform random split: ids (0, 1, ..., p-1, 0, 1, ...) shuffled.
inline PartitionPlan partition(std::size_t n, std::size_t p, std::uint64_t seed) {
  if (p < 1) throw ConfigError("partition count must be at least 1");
  if (p > n) throw ConfigError("partition count " + std::to_string(p) + " exceeds row count " + std::to_string(n));
  PartitionPlan plan;
  plan.p = p;
  plan.seed = seed;
  plan.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) plan.assignment[i] = i % p;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(plan.assignment[i - 1], plan.assignment[pick(rng)]);
  }
  return plan;
}

inline PartitionPlan partition(const Dataset& data, std::size_t p, std::uint64_t seed) {
  return partition(data.rows(), p, seed);
}

struct WeightEstimate {
  Matrix weight;
  bool ridged = false;
};

inline constexpr double kWeightConditionLimit = 1e12;
inline constexpr double kWeightRidge = 1e-8;

// Inverse sample covariance of a draw matrix (rows are draws). Ill-conditioned
// covariances get a ridge of kWeightRidge * trace / l before inversion.
inline WeightEstimate estimate_weight(const Matrix& draws) {
  const auto m = draws.rows();
  const auto l = draws.cols();
  if (m <= l)
    throw NumericalError("weight estimate needs more draws (" + std::to_string(m) + ") than coefficients (" +
                         std::to_string(l) + ")");
  const Matrix centered = draws.rowwise() - draws.colwise().mean();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(m - 1);
  WeightEstimate w;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kWeightConditionLimit) {
    cov += (kWeightRidge * cov.trace() / static_cast<double>(l)) * Matrix::Identity(l, l);
    w.ridged = true;
  }
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("posterior covariance of a partition is singular");
  w.weight = llt.solve(Matrix::Identity(l, l));
  w.weight = 0.5 * (w.weight + w.weight.transpose()).eval();
  return w;
}

// combined(s) = (sum_i W_i)^{-1} sum_i W_i beta_i(s), pairing the s-th kept
// draw of every partition. Draws are rows, so with symmetric W_i this is
// (sum_i B_i W_i) (sum_i W_i)^{-1}.
inline Matrix combine(const std::vector<Matrix>& draws, const std::vector<Matrix>& weights) {
  if (draws.empty() || draws.size() != weights.size())
    throw NumericalError("combination needs one weight per partition");
  const auto m = draws.front().rows();
  const auto l = draws.front().cols();
  Matrix weight_sum = Matrix::Zero(l, l);
  Matrix weighted = Matrix::Zero(m, l);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    if (draws[i].rows() != m || draws[i].cols() != l)
      throw NumericalError("partition " + std::to_string(i) + " draw matrix has shape " +
                           std::to_string(draws[i].rows()) + "x" + std::to_string(draws[i].cols()) + ", expected " +
                           std::to_string(m) + "x" + std::to_string(l));
    if (weights[i].rows() != l || weights[i].cols() != l)
      throw NumericalError("partition " + std::to_string(i) + " weight has the wrong shape");
    weight_sum += weights[i];
    weighted.noalias() += draws[i] * weights[i];
  }
  Eigen::LLT<Matrix> llt(weight_sum);
  if (llt.info() != Eigen::Success) throw NumericalError("sum of consensus weights is not positive definite");
  return llt.solve(weighted.transpose()).transpose();
}

struct ConsensusEnsemble {
  PartitionPlan plan;
  std::vector<ChainOutput> per_partition;
  std::vector<Matrix> weights;
  std::vector<bool> ridged;
  std::vector<std::string> kernels;
  Matrix combined;
  double wall_seconds = 0.0;

  std::size_t p() const noexcept { return per_partition.size(); }
};

// Runs run_partition(k) for k in [0, p) on up to `concurrency` threads, then
// estimates weights on the kept draws and combines. A single partition is
// returned unchanged.
template <class Runner>
ConsensusEnsemble run_partitioned(std::size_t p, Runner&& run_partition, std::size_t concurrency) {
  if (p < 1) throw ConfigError("partition count must be at least 1");
  ConsensusEnsemble ens;
  ens.per_partition.resize(p);
  std::vector<std::exception_ptr> errors(p);
  const auto start = std::chrono::steady_clock::now();
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next.fetch_add(1); k < p; k = next.fetch_add(1)) {
      try {
        ens.per_partition[k] = run_partition(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(concurrency, 1, p);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (std::size_t k = 0; k < p; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const Error& e) {
      throw Error("partition " + std::to_string(k) + ": " + e.what(), e.exit_code());
    } catch (const std::exception& e) {
      throw NumericalError("partition " + std::to_string(k) + ": " + e.what());
    }
  }
  ens.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::vector<Matrix> draws;
  for (std::size_t k = 0; k < p; ++k) {
    draws.push_back(ens.per_partition[k].draws);
    ens.kernels.push_back(ens.per_partition[k].method_tag);
    if (draws.back().rows() != draws.front().rows() || draws.back().cols() != draws.front().cols())
      throw NumericalError("partition " + std::to_string(k) + " kept a different number of draws");
  }
  for (std::size_t k = 0; k < p; ++k) {
    try {
      WeightEstimate w = estimate_weight(draws[k]);
      ens.weights.push_back(std::move(w.weight));
      ens.ridged.push_back(w.ridged);
      if (w.ridged) ens.per_partition[k].meta["weight_ridge"] = "true";
    } catch (const Error& e) {
      throw Error("partition " + std::to_string(k) + ": " + e.what(), e.exit_code());
    }
  }
  ens.combined = p == 1 ? draws.front() : combine(draws, ens.weights);
  return ens;
}

enum class ConsensusKernelType { mh, two_stage };

// Subsample size per partition: a fraction of the partition's subsampled
// class, or a total count split in proportion to class size.
struct SubsampleRule {
  double fraction = 0.0;
  std::size_t count = 0;

  std::size_t resolve(std::size_t class_size, std::size_t total_class_size) const {
    double a = fraction > 0.0 ? fraction * static_cast<double>(class_size)
                              : static_cast<double>(count) * static_cast<double>(class_size) /
                                    static_cast<double>(std::max<std::size_t>(1, total_class_size));
    const auto r = static_cast<std::size_t>(std::llround(a));
    return std::clamp<std::size_t>(r, 1, class_size);
  }
};

struct ConsensusKernel {
  ConsensusKernelType type = ConsensusKernelType::mh;
  SubsampleRule subsample;
  RefreshSchedule refresh;
};

using ProposalFactory = std::function<ProposalSpec(const Dataset&, const PriorSpec&)>;

// Consensus Monte Carlo for the logistic model. Partition k runs with prior
// weight 1/p and chain seed derive_seed(config.seed, "chain", k). Two-stage
// partitions lacking one outcome class fall back to exact Metropolis.
inline ConsensusEnsemble run_consensus(const Dataset& data, const PriorSpec& prior, const ProposalFactory& make_proposal,
                                       const ChainConfig& config, const PartitionPlan& plan,
                                       const ConsensusKernel& kernel, std::size_t workers = 1) {
  const std::size_t p = plan.p;
  if (plan.assignment.size() != data.rows()) throw ConfigError("partition plan does not match the dataset");
  for (auto s : plan.sizes())
    if (s == 0) throw ConfigError("partition plan has an empty partition");
  config.validate(data.cols());
  const PriorSpec part_prior = prior.reweighted(prior.weight() / static_cast<double>(p));
  const std::size_t concurrency = std::clamp<std::size_t>(workers, 1, p);
  const std::size_t eval_workers = std::max<std::size_t>(1, workers / concurrency);

  std::size_t total_class = 0;
  if (kernel.type == ConsensusKernelType::two_stage) {
    const CaseControlIndex full = build_index(data);
    total_class = full.sampled_count();
  }

  auto runner = [&](std::size_t k) {
    const Dataset part = data.select(plan.rows_of(k));
    const ProposalSpec proposal = make_proposal(part, part_prior);
    ChainConfig cfg = config;
    cfg.seed = derive_seed(config.seed, "chain", k);
    WorkerPool pool(eval_workers);
    ChainOutput out;
    if (kernel.type == ConsensusKernelType::two_stage) {
      std::size_t n1 = 0;
      for (auto v : part.y()) n1 += v;
      if (n1 == 0 || n1 == part.rows()) {
        out = mh_run(part, part_prior, proposal, cfg, &pool);
        out.meta["warning"] = "single outcome class in partition; exact Metropolis used";
      } else {
        const CaseControlIndex idx = build_index(part);
        const std::size_t a = kernel.subsample.resolve(idx.sampled_count(), total_class);
        out = two_stage_mh_run(part, part_prior, proposal, cfg, a, kernel.refresh, &pool);
      }
    } else {
      out = mh_run(part, part_prior, proposal, cfg, &pool);
    }
    out.meta["partition"] = std::to_string(k);
    out.meta["partition_rows"] = std::to_string(part.rows());
    out.meta["prior_weight"] = detail::format_double(part_prior.weight());
    return out;
  };
  ConsensusEnsemble ens = run_partitioned(p, runner, concurrency);
  ens.plan = plan;
  return ens;
}

}  // namespace logitmc

#endif  // LOGITMC_CONSENSUS_HPP_
