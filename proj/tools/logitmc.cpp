// Command-line front end: simulate, fit, summarize, compare, bench.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "logitmc/logitmc.hpp"

namespace {

using namespace logitmc;

const std::vector<std::string> kManifestKeys = {
    "method", "data", "schema", "synthetic_n", "synthetic_l", "synthetic_sparsity", "synthetic_seed",
    "synthetic_design", "prior_variance", "prior_intercept_variance", "iterations", "burnin", "thinning", "seed",
    "subsample_size", "subsample_fraction", "refresh_every", "partitions", "workers", "proposal",
    "proposal_variance", "adapt", "output"};

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

void print_summary(const SummaryReport& r) {
  std::printf("method %s: %zu kept draws, acceptance %.4f, promotion %.4f, stage-2 acceptance %.4f\n",
              r.method.c_str(), r.kept, r.acceptance_rate, r.promotion_rate, r.stage2_acceptance_rate);
  std::printf("exact evals %zu, approx evals %zu, %.3f s, %.1f iterations/s\n", r.exact_evals, r.approx_evals,
              r.wall_seconds, r.iterations_per_second);
  std::printf("%-20s %12s %12s %12s %12s %12s %10s %12s\n", "coefficient", "mean", "sd", "2.5%", "50%", "97.5%", "ess",
              "mcse");
  for (const auto& c : r.coefficients)
    std::printf("%-20s %12.6g %12.6g %12.6g %12.6g %12.6g %10.1f %12.4g\n", c.name.c_str(), c.mean, c.sd, c.q025,
                c.q50, c.q975, c.ess, c.mcse);
}

void print_bench(const BenchReport& r) {
  std::printf("%-22s %-14s %8s %12s %14s %12s\n", "method", "label", "workers", "iter/s", "iter/core/s", "ratio");
  for (const auto& row : r.rows)
    std::printf("%-22s %-14s %8zu %12.2f %14.2f %12.3f\n", to_string(row.method).c_str(), row.label.c_str(),
                row.workers, row.aggregate_iterations_per_second, row.per_core_iterations_per_second, row.speed_ratio);
  std::printf("baseline: %s, hardware threads: %u, repeats: %zu\n", r.baseline.c_str(), r.hardware_threads, r.repeat);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and scalable MCMC for Bayesian logistic classification"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic sparse-outcome dataset");
  std::size_t sim_n = 10000, sim_l = 5;
  double sim_sparsity = 0.046;
  std::uint64_t sim_seed = 1;
  std::string sim_design = "gaussian", sim_out;
  sim->add_option("--n", sim_n, "Rows")->capture_default_str();
  sim->add_option("--l", sim_l, "Coefficients including the intercept")->capture_default_str();
  sim->add_option("--sparsity", sim_sparsity, "Target success fraction")->capture_default_str();
  sim->add_option("--seed", sim_seed, "Generator seed")->capture_default_str();
  sim->add_option("--design", sim_design, "gaussian or bank")->capture_default_str();
  sim->add_option("--out", sim_out, "Output stem (<stem>.csv, <stem>.schema.txt, <stem>.truth.txt)")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Run one sampler and write draws, metadata and summary");
  std::string manifest_path;
  fit->add_option("--manifest", manifest_path, "Manifest file (key = value, manifest_version = 1)");
  std::map<std::string, std::string> overrides;
  for (const auto& key : kManifestKeys) fit->add_option(flag_name(key), overrides[key], "Manifest field " + key);
  std::string fit_out;
  fit->add_option("--out", fit_out, "Output stem (same as --output)");

  // summarize
  auto* sum = app.add_subcommand("summarize", "Summarize a written chain");
  std::string sum_chain, sum_out;
  sum->add_option("--chain", sum_chain, "Chain stem")->required();
  sum->add_option("--out", sum_out, "Summary CSV path (default <stem>.summary.csv)");

  // compare
  auto* cmp = app.add_subcommand("compare", "Compare posterior draws of several runs");
  std::vector<std::string> cmp_chains, cmp_labels;
  std::string cmp_out;
  std::size_t cmp_bins = 50;
  cmp->add_option("--chains", cmp_chains, "Chain stems (first is the reference)")->required()->expected(2, -1);
  cmp->add_option("--labels", cmp_labels, "Run labels (default: stems)");
  cmp->add_option("--bins", cmp_bins, "Density bins")->capture_default_str();
  cmp->add_option("--out", cmp_out, "Output stem (<stem>.compare.csv, <stem>.density.csv)")->required();

  // bench
  auto* bch = app.add_subcommand("bench", "Time samplers and report speed ratios");
  std::vector<std::string> bch_manifests, bch_labels;
  std::size_t bch_repeat = 3;
  std::string bch_out;
  bch->add_option("--manifests", bch_manifests, "Manifest files")->required()->expected(1, -1);
  bch->add_option("--labels", bch_labels, "Row labels");
  bch->add_option("--repeat", bch_repeat, "Repetitions per manifest (>= 3)")->capture_default_str();
  bch->add_option("--out", bch_out, "Output stem (<stem>.bench.csv)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) {
      SyntheticSpec spec;
      spec.n = sim_n;
      spec.l = sim_l;
      spec.sparsity_target = sim_sparsity;
      spec.seed = sim_seed;
      if (sim_design == "bank") {
        spec.design = CovariateDesign::bank;
        spec.true_beta = (Vector(5) << 0.0, 0.3, 1.5, -0.4, 0.6).finished();
      } else if (sim_design == "gaussian") {
        spec.true_beta = default_true_beta(sim_l);
      } else {
        throw ConfigError("unknown design '" + sim_design + "'");
      }
      const SyntheticData s = generate(spec);
      write_dataset_csv(s.data, sim_out + ".csv");
      SchemaSpec schema;
      schema.response = "y";
      schema.positive_label = "1";
      schema.intercept = true;
      const auto& names = s.data.feature_names();
      schema.numeric.assign(names.begin() + 1, names.end());
      std::ofstream(sim_out + ".schema.txt") << schema.serialize();
      std::ofstream truth(sim_out + ".truth.txt");
      truth.precision(17);
      truth << "realized_fraction = " << s.realized_fraction << "\n";
      for (std::size_t j = 0; j < names.size(); ++j)
        truth << "beta." << names[j] << " = " << s.true_beta[static_cast<Eigen::Index>(j)] << "\n";
      std::printf("wrote %zu rows, success fraction %.4f\n", s.data.rows(), s.realized_fraction);
    } else if (*fit) {
      RunManifest m = manifest_path.empty() ? RunManifest{} : RunManifest::read(manifest_path);
      for (const auto& key : kManifestKeys)
        if (fit->get_option(flag_name(key))->count() > 0) m.set(key, overrides[key]);
      if (!fit_out.empty()) m.output = fit_out;
      print_summary(cmd_fit(m));
    } else if (*sum) {
      const ChainOutput chain = read_chain(sum_chain);
      const SummaryReport r = summarize(chain);
      write_summary(r, sum_out.empty() ? sum_chain + ".summary.csv" : sum_out);
      print_summary(r);
    } else if (*cmp) {
      std::vector<ChainOutput> chains;
      for (const auto& stem : cmp_chains) chains.push_back(read_chain(stem));
      if (cmp_labels.empty()) cmp_labels = cmp_chains;
      const CompareReport r = compare(chains, cmp_labels, cmp_bins);
      write_compare(r, cmp_out);
      std::printf("%-20s %-16s %-16s %12s %12s %10s %8s\n", "coefficient", "run_a", "run_b", "mean_diff", "comb_mcse",
                  "sd_ratio", "ks");
      for (const auto& p : r.pairs)
        std::printf("%-20s %-16s %-16s %12.4g %12.4g %10.4f %8.4f\n", p.coefficient.c_str(),
                    r.labels[p.run_a].c_str(), r.labels[p.run_b].c_str(), p.mean_diff, p.combined_mcse, p.sd_ratio,
                    p.ks);
    } else if (*bch) {
      std::vector<RunManifest> manifests;
      for (const auto& path : bch_manifests) manifests.push_back(RunManifest::read(path));
      const BenchReport r = bench(manifests, bch_repeat, bch_labels);
      write_bench(r, bch_out + ".bench.csv");
      print_bench(r);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error kind=%s code=%d message=\"%s\"\n", e.kind(), e.exit_code(), e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error kind=internal code=3 message=\"%s\"\n", e.what());
    return 3;
  }
  return 0;
}
