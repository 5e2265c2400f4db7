#ifndef LOGITMC_CASE_CONTROL_HPP_
#define LOGITMC_CASE_CONTROL_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "logitmc/model.hpp"
#include "logitmc/random.hpp"

namespace logitmc {

// Row indices split by outcome. The minority class is summed exactly by the
// case-control estimator and the majority class is subsampled; normally the
// minority is y = 1. When successes outnumber failures the roles swap and
// `swapped` records it.
struct CaseControlIndex {
  std::vector<std::size_t> success_rows;
  std::vector<std::size_t> failure_rows;
  std::size_t n1 = 0;
  std::size_t n0 = 0;
  bool swapped = false;

  std::size_t n() const noexcept { return n0 + n1; }
  const std::vector<std::size_t>& exact_rows() const noexcept { return swapped ? failure_rows : success_rows; }
  const std::vector<std::size_t>& sampled_rows() const noexcept { return swapped ? success_rows : failure_rows; }
  std::size_t sampled_count() const noexcept { return swapped ? n1 : n0; }
};

struct Subsample {
  std::vector<std::size_t> rows;  // sorted ascending, no duplicates
  std::size_t a = 0;
  std::uint64_t seed_tag = 0;

  bool exhaustive(const CaseControlIndex& index) const noexcept { return a == index.sampled_count(); }
};

inline CaseControlIndex build_index(const Dataset& data) {
  CaseControlIndex index;
  const auto& y = data.y();
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? index.success_rows : index.failure_rows).push_back(i);
  index.n1 = index.success_rows.size();
  index.n0 = index.failure_rows.size();
  if (index.n1 == 0 || index.n0 == 0)
    throw DegenerateOutcomeError("all " + std::to_string(y.size()) + " responses are " +
                                 (index.n1 == 0 ? "0" : "1") + "; case-control split needs both classes");
  index.swapped = index.n1 > index.n0;
  return index;
}

// Uniform sample of `a` rows from the subsampled class, without replacement.
// Same seed, same rows.
inline Subsample draw_subsample(const CaseControlIndex& index, std::size_t a, std::uint64_t seed) {
  const auto& pool = index.sampled_rows();
  if (a < 1 || a > pool.size())
    throw ConfigError("subsample size " + std::to_string(a) + " outside [1, " + std::to_string(pool.size()) + "]");
  std::vector<std::size_t> rows(pool);
  Rng rng(seed);
  // Partial Fisher-Yates: the first a slots end up a uniform a-subset.
  for (std::size_t k = 0; k < a; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, rows.size() - 1);
    std::swap(rows[k], rows[pick(rng)]);
  }
  rows.resize(a);
  std::sort(rows.begin(), rows.end());
  return Subsample{std::move(rows), a, seed};
}

// Rows of a dataset copied into contiguous storage. A chain evaluates the same
// minority-class rows and subsample at every iteration; gathering them once
// turns scattered row reads into a stream.
struct PackedRows {
  RowMatrix X;
  std::vector<std::uint8_t> y;
  std::vector<std::size_t> source;  // row numbers in the full dataset

  std::size_t size() const noexcept { return y.size(); }
};

inline PackedRows pack_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  PackedRows p;
  p.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(data.cols()));
  p.y.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    p.X.row(static_cast<Eigen::Index>(k)) = data.X().row(static_cast<Eigen::Index>(rows[k]));
    p.y.push_back(data.y()[rows[k]]);
  }
  p.source = rows;
  return p;
}

inline double packed_log_likelihood(const Beta& beta, const PackedRows& rows, WorkerPool* pool = nullptr) {
  return ordered_block_reduce(
      block_count(rows.size()),
      [&](std::size_t b) {
        return detail::dense_block_sum(beta, rows.X, rows.y, b, [&](std::size_t i) { return rows.source[i]; });
      },
      pool);
}

namespace detail {

inline double indexed_log_likelihood(const Beta& beta, const Dataset& data, const std::vector<std::size_t>& rows,
                                     WorkerPool* pool) {
  return packed_log_likelihood(beta, pack_rows(data, rows), pool);
}

inline double case_control_combine(double exact_part, double sampled_part, const CaseControlIndex& index,
                                   const Subsample& sub) {
  const double scale = static_cast<double>(index.sampled_count()) / static_cast<double>(sub.a);
  return exact_part + scale * sampled_part;
}

}  // namespace detail

// Case-control estimate of the log-likelihood: the exact sum over the
// minority class plus the subsample sum scaled by (class size / a).
// An exhaustive subsample is the exact log-likelihood and is evaluated by the
// exact path, so the two agree bitwise.
inline double approx_log_likelihood(const Beta& beta, const Dataset& data, const CaseControlIndex& index,
                                    const Subsample& sub, WorkerPool* pool = nullptr) {
  check_dims(beta, data);
  if (sub.exhaustive(index)) return exact_log_likelihood(beta, data, pool);
  return detail::case_control_combine(detail::indexed_log_likelihood(beta, data, index.exact_rows(), pool),
                                      detail::indexed_log_likelihood(beta, data, sub.rows, pool), index, sub);
}

inline double approx_log_posterior(const Beta& beta, const Dataset& data, const CaseControlIndex& index,
                                   const Subsample& sub, const PriorSpec& prior, WorkerPool* pool = nullptr) {
  return approx_log_likelihood(beta, data, index, sub, pool) + log_prior(beta, prior);
}

}  // namespace logitmc

#endif  // LOGITMC_CASE_CONTROL_HPP_
