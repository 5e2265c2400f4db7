#ifndef LOGITMC_WORKFLOW_HPP_
#define LOGITMC_WORKFLOW_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "logitmc/case_control.hpp"
#include "logitmc/chain.hpp"
#include "logitmc/chain_io.hpp"
#include "logitmc/consensus.hpp"
#include "logitmc/data_io.hpp"
#include "logitmc/diagnostics.hpp"
#include "logitmc/manifest.hpp"
#include "logitmc/model.hpp"
#include "logitmc/random.hpp"
#include "logitmc/samplers.hpp"
#include "logitmc/synthetic.hpp"

namespace logitmc {

inline SyntheticSpec synthetic_spec(const RunManifest& m) {
  SyntheticSpec s;
  s.n = m.synthetic_n;
  s.l = m.synthetic_l;
  s.sparsity_target = m.synthetic_sparsity;
  s.seed = m.synthetic_seed ? *m.synthetic_seed : derive_seed(m.seed, "synthetic");
  if (m.synthetic_design == "gaussian") s.design = CovariateDesign::gaussian;
  else if (m.synthetic_design == "bank") s.design = CovariateDesign::bank;
  else throw ConfigError("unknown synthetic_design '" + m.synthetic_design + "'");
  s.true_beta = s.design == CovariateDesign::bank ? Vector((Vector(5) << 0.0, 0.3, 1.5, -0.4, 0.6).finished())
                                                  : default_true_beta(s.l);
  return s;
}

inline Dataset load_dataset(const RunManifest& m) {
  if (m.synthetic()) return generate(synthetic_spec(m)).data;
  return ingest(m.data, SchemaSpec::read(m.schema)).data;
}

// Isotropic prior; the intercept may get its own variance when column 0 is named "intercept".
inline PriorSpec make_prior(const RunManifest& m, const Dataset& data) {
  const auto l = static_cast<Eigen::Index>(data.cols());
  Matrix cov = Matrix::Identity(l, l) * m.prior_variance;
  if (m.prior_intercept_variance) {
    if (data.feature_names().front() != "intercept")
      throw ConfigError("prior_intercept_variance given but the design has no intercept column");
    cov(0, 0) = *m.prior_intercept_variance;
  }
  return PriorSpec(cov);
}

inline ProposalFactory make_proposal_factory(const RunManifest& m) {
  if (m.proposal == "isotropic") {
    const double v = m.proposal_variance;
    const bool adapt = m.adapt;
    return [v, adapt](const Dataset& d, const PriorSpec&) { return ProposalSpec::isotropic(d.cols(), v, adapt); };
  }
  const bool adapt = m.adapt;
  return [adapt](const Dataset& d, const PriorSpec& p) { return laplace_proposal(d, p, adapt); };
}

inline ChainConfig chain_config(const RunManifest& m, std::uint64_t seed) {
  ChainConfig c;
  c.iterations = m.iterations;
  c.burnin = m.burnin;
  c.thinning = m.thinning;
  c.seed = seed;
  return c;
}

struct FitResult {
  ChainOutput chain;  // for consensus methods: combined draws with summed counters
  std::optional<ConsensusEnsemble> ensemble;
};

inline std::size_t resolve_subsample(const RunManifest& m, const CaseControlIndex& index) {
  SubsampleRule rule{m.subsample_fraction, m.subsample_size};
  if (m.subsample_size > index.sampled_count())
    throw ConfigError("subsample_size " + std::to_string(m.subsample_size) + " exceeds the subsampled class size " +
                      std::to_string(index.sampled_count()));
  return rule.resolve(index.sampled_count(), index.sampled_count());
}

// Runs the manifest's sampler on an already loaded dataset. Single chains use
// seed derive_seed(master, "chain", 0); consensus partition k uses
// derive_seed(master, "chain", k), so one partition reproduces the single chain.
// Large reference runs report no thinning; the preset follows the smaller
// study's 20. Recorded so a preset is never mistaken for a choice.
inline std::string thinning_source(const RunManifest& m) {
  return m.thinning_configured ? "configured" : "preset";
}

inline FitResult run_fit(const RunManifest& m, const Dataset& data) {
  m.validate();
  const PriorSpec prior = make_prior(m, data);
  const ProposalFactory make_proposal = make_proposal_factory(m);
  FitResult result;
  const RefreshSchedule refresh{m.effective_refresh()};

  if (!is_consensus(m.method)) {
    const ChainConfig config = chain_config(m, derive_seed(m.seed, "chain", 0));
    const ProposalSpec proposal = make_proposal(data, prior);
    WorkerPool pool(m.workers);
    switch (m.method) {
      case Method::mh:
      case Method::parallel_mh: result.chain = mh_run(data, prior, proposal, config, &pool); break;
      case Method::subsample: {
        const auto a = resolve_subsample(m, build_index(data));
        result.chain = subsampling_mh_run(data, prior, proposal, config, a, refresh, &pool);
        break;
      }
      case Method::two_stage: {
        const auto a = resolve_subsample(m, build_index(data));
        result.chain = two_stage_mh_run(data, prior, proposal, config, a, refresh, &pool);
        break;
      }
      default: break;
    }
    result.chain.method_tag = to_string(m.method);
    result.chain.meta["master_seed"] = std::to_string(m.seed);
    result.chain.meta["thinning_source"] = thinning_source(m);
    return result;
  }

  ConsensusKernel kernel;
  if (m.method == Method::consensus_two_stage) {
    kernel.type = ConsensusKernelType::two_stage;
    kernel.subsample = SubsampleRule{m.subsample_fraction, m.subsample_size};
    kernel.refresh = refresh;
  }
  const PartitionPlan plan = partition(data, m.partitions, derive_seed(m.seed, "partition"));
  ConsensusEnsemble ens = run_consensus(data, prior, make_proposal, chain_config(m, m.seed), plan, kernel, m.workers);

  ChainOutput& c = result.chain;
  c.draws = ens.combined;
  c.names = data.feature_names();
  c.iterations = m.iterations;
  for (const auto& part : ens.per_partition) {
    c.stage1_proposals += part.stage1_proposals;
    c.stage1_promotions += part.stage1_promotions;
    c.stage2_accepts += part.stage2_accepts;
    c.stage2_prob_sum += part.stage2_prob_sum;
    c.exact_evals += part.exact_evals;
    c.approx_evals += part.approx_evals;
  }
  c.wall_seconds = ens.wall_seconds;
  c.method_tag = to_string(m.method);
  c.meta["master_seed"] = std::to_string(m.seed);
  c.meta["target"] = "consensus-approximation";
  c.meta["partitions"] = std::to_string(ens.p());
  c.meta["workers"] = std::to_string(m.workers);
  c.meta["weights_from"] = "kept-draws";
  c.meta["thinning_source"] = thinning_source(m);
  c.meta["iterations_total"] = std::to_string(m.iterations * ens.p());
  std::string kernels;
  std::size_t ridged = 0;
  for (std::size_t k = 0; k < ens.p(); ++k) {
    kernels += (k ? ";" : "") + ens.kernels[k];
    ridged += ens.ridged[k];
  }
  c.meta["partition_kernels"] = kernels;
  c.meta["ridged_partitions"] = std::to_string(ridged);
  result.ensemble = std::move(ens);
  return result;
}

inline void write_partition_plan(const PartitionPlan& plan, const std::string& path) {
  auto out = detail::open_for_write(path);
  out << "# partitions = " << plan.p << "\n# seed = " << plan.seed << "\nrow,partition\n";
  for (std::size_t i = 0; i < plan.assignment.size(); ++i) out << i << "," << plan.assignment[i] << "\n";
  if (!out) throw DataError("write failed for " + path);
}

// Fits, then writes `<stem>.draws.csv`, `<stem>.meta.txt`, `<stem>.summary.csv`
// and `<stem>.manifest.txt`; consensus runs add per-partition chains
// `<stem>.part<k>.*` and `<stem>.plan.csv`.
inline SummaryReport cmd_fit(const RunManifest& m) {
  if (m.output.empty()) throw ConfigError("fit needs an output stem");
  m.validate();
  const Dataset data = load_dataset(m);
  const FitResult fit = run_fit(m, data);
  write_chain(fit.chain, m.output);
  if (fit.ensemble) {
    for (std::size_t k = 0; k < fit.ensemble->p(); ++k)
      write_chain(fit.ensemble->per_partition[k], m.output + ".part" + std::to_string(k));
    write_partition_plan(fit.ensemble->plan, m.output + ".plan.csv");
  }
  {
    auto out = detail::open_for_write(m.output + ".manifest.txt");
    out << m.serialize();
  }
  SummaryReport r = summarize(fit.chain);
  write_summary(r, m.output + ".summary.csv");
  return r;
}

struct PairComparison {
  std::string coefficient;
  std::size_t run_a = 0;
  std::size_t run_b = 0;
  double mean_diff = 0.0;      // mean_a - mean_b
  double combined_mcse = 0.0;  // sqrt(mcse_a^2 + mcse_b^2)
  double sd_ratio = 0.0;       // sd_a / sd_b
  double ks = 0.0;
};

struct CompareReport {
  std::vector<std::string> labels;
  std::vector<SummaryReport> summaries;
  std::vector<PairComparison> pairs;
  std::vector<std::string> coefficients;
  std::vector<DensityTable> densities;  // one per coefficient
};

inline CompareReport compare(const std::vector<ChainOutput>& chains, const std::vector<std::string>& labels,
                             std::size_t bins = 50) {
  if (chains.size() < 2) throw ConfigError("compare needs at least two runs");
  if (labels.size() != chains.size()) throw ConfigError("one label per run");
  CompareReport r;
  r.labels = labels;
  r.coefficients = chains.front().names;
  for (std::size_t k = 0; k < chains.size(); ++k) {
    if (chains[k].names != r.coefficients)
      throw DataError("run '" + labels[k] + "' has different coefficient names than '" + labels.front() + "'");
    r.summaries.push_back(summarize(chains[k]));
  }
  for (std::size_t j = 0; j < r.coefficients.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    for (std::size_t a = 0; a < chains.size(); ++a)
      for (std::size_t b = a + 1; b < chains.size(); ++b) {
        const auto& sa = r.summaries[a].coefficients[j];
        const auto& sb = r.summaries[b].coefficients[j];
        PairComparison pc;
        pc.coefficient = r.coefficients[j];
        pc.run_a = a;
        pc.run_b = b;
        pc.mean_diff = sa.mean - sb.mean;
        pc.combined_mcse = std::sqrt(sa.mcse * sa.mcse + sb.mcse * sb.mcse);
        pc.sd_ratio = sa.sd / sb.sd;
        pc.ks = ks_statistic(Vector(chains[a].draws.col(col)), Vector(chains[b].draws.col(col)));
        r.pairs.push_back(pc);
      }
    std::vector<std::vector<double>> samples;
    for (const auto& c : chains) {
      const Vector v = c.draws.col(col);
      samples.emplace_back(v.data(), v.data() + v.size());
    }
    r.densities.push_back(binned_density(samples, bins));
  }
  return r;
}

inline void write_compare(const CompareReport& r, const std::string& stem) {
  {
    auto out = detail::open_for_write(stem + ".compare.csv");
    out << "coefficient,run,mean,sd,q025,q50,q975,ess,mcse\n";
    for (std::size_t j = 0; j < r.coefficients.size(); ++j)
      for (std::size_t k = 0; k < r.labels.size(); ++k) {
        const auto& c = r.summaries[k].coefficients[j];
        out << c.name << "," << r.labels[k] << "," << c.mean << "," << c.sd << "," << c.q025 << "," << c.q50 << ","
            << c.q975 << "," << c.ess << "," << c.mcse << "\n";
      }
    out << "\ncoefficient,run_a,run_b,mean_diff,combined_mcse,sd_ratio,ks\n";
    for (const auto& p : r.pairs)
      out << p.coefficient << "," << r.labels[p.run_a] << "," << r.labels[p.run_b] << "," << p.mean_diff << ","
          << p.combined_mcse << "," << p.sd_ratio << "," << p.ks << "\n";
  }
  auto out = detail::open_for_write(stem + ".density.csv");
  out << "coefficient,bin_lo,bin_hi";
  for (const auto& l : r.labels) out << "," << l;
  out << "\n";
  for (std::size_t j = 0; j < r.coefficients.size(); ++j) {
    const auto& t = r.densities[j];
    for (std::size_t b = 0; b + 1 < t.edges.size(); ++b) {
      out << r.coefficients[j] << "," << t.edges[b] << "," << t.edges[b + 1];
      for (const auto& d : t.density) out << "," << d[b];
      out << "\n";
    }
  }
}

struct BenchRow {
  std::string label;
  Method method = Method::mh;
  std::size_t workers = 1;
  std::size_t chains = 1;
  double median_seconds = 0.0;
  double iterations_per_second = 0.0;            // per chain
  double aggregate_iterations_per_second = 0.0;  // all chains together
  double per_core_iterations_per_second = 0.0;   // aggregate / workers
  double speed_ratio = 0.0;                      // per-core versus the parallel-mh baseline
  std::size_t exact_evals = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::size_t repeat = 0;
  unsigned hardware_threads = 0;
  std::string baseline;
};

inline constexpr double kMinBenchSeconds = 0.01;

// Median sampler wall time per manifest over `repeat` runs. Data loading and
// proposal construction are excluded from the timing.
inline BenchReport bench(const std::vector<RunManifest>& manifests, std::size_t repeat,
                         const std::vector<std::string>& labels = {}) {
  if (repeat < 3) throw ConfigError("bench needs repeat >= 3");
  if (manifests.empty()) throw ConfigError("bench needs at least one manifest");
  BenchReport report;
  report.repeat = repeat;
  report.hardware_threads = std::thread::hardware_concurrency();
  std::vector<std::pair<std::string, Dataset>> cache;
  for (std::size_t k = 0; k < manifests.size(); ++k) {
    const auto& m = manifests[k];
    m.validate();
    std::string key = "file:" + m.data + "|" + m.schema;
    if (m.synthetic()) {
      const SyntheticSpec s = synthetic_spec(m);
      key = "synthetic:" + std::to_string(s.n) + "|" + std::to_string(s.l) + "|" + detail::format_double(s.sparsity_target) +
            "|" + std::to_string(s.seed) + "|" + m.synthetic_design;
    }
    auto it = std::find_if(cache.begin(), cache.end(), [&](const auto& e) { return e.first == key; });
    if (it == cache.end()) {
      cache.emplace_back(key, load_dataset(m));
      it = std::prev(cache.end());
    }
    std::vector<double> seconds;
    BenchRow row;
    for (std::size_t r = 0; r < repeat; ++r) {
      const FitResult fit = run_fit(m, it->second);
      seconds.push_back(fit.chain.wall_seconds);
      row.exact_evals = fit.chain.exact_evals;
    }
    std::sort(seconds.begin(), seconds.end());
    row.median_seconds = seconds[seconds.size() / 2];
    if (row.median_seconds < kMinBenchSeconds)
      throw BenchmarkError("run '" + (k < labels.size() ? labels[k] : to_string(m.method)) + "' took " +
                           std::to_string(row.median_seconds) + " s; increase iterations for a meaningful timing");
    row.label = k < labels.size() ? labels[k] : to_string(m.method);
    row.method = m.method;
    row.workers = m.workers;
    row.chains = is_consensus(m.method) ? m.partitions : 1;
    row.iterations_per_second = static_cast<double>(m.iterations) / row.median_seconds;
    row.aggregate_iterations_per_second = row.iterations_per_second * static_cast<double>(row.chains);
    row.per_core_iterations_per_second = row.aggregate_iterations_per_second / static_cast<double>(row.workers);
    report.rows.push_back(row);
  }
  auto base = std::find_if(report.rows.begin(), report.rows.end(),
                           [](const BenchRow& r) { return r.method == Method::parallel_mh; });
  if (base == report.rows.end())
    base = std::find_if(report.rows.begin(), report.rows.end(), [](const BenchRow& r) { return r.method == Method::mh; });
  if (base == report.rows.end()) base = report.rows.begin();
  report.baseline = base->label;
  const double ref = base->per_core_iterations_per_second;
  for (auto& r : report.rows) r.speed_ratio = r.per_core_iterations_per_second / ref;
  return report;
}

inline void write_bench(const BenchReport& r, const std::string& path) {
  auto out = detail::open_for_write(path);
  out << "# repeat = " << r.repeat << "\n# hardware_threads = " << r.hardware_threads << "\n# baseline = " << r.baseline
      << "\n";
  out << "method,label,workers,chains,median_seconds,iterations_per_second,aggregate_iterations_per_second,"
         "iterations_per_core_per_second,speed_ratio,exact_evals\n";
  for (const auto& row : r.rows)
    out << to_string(row.method) << "," << row.label << "," << row.workers << "," << row.chains << ","
        << row.median_seconds << "," << row.iterations_per_second << "," << row.aggregate_iterations_per_second << ","
        << row.per_core_iterations_per_second << "," << row.speed_ratio << "," << row.exact_evals << "\n";
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace logitmc

#endif  // LOGITMC_WORKFLOW_HPP_
