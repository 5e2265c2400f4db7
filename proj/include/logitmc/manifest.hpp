#ifndef LOGITMC_MANIFEST_HPP_
#define LOGITMC_MANIFEST_HPP_

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>

#include "logitmc/data_io.hpp"
#include "logitmc/error.hpp"

namespace logitmc {

enum class Method { mh, parallel_mh, subsample, two_stage, consensus, consensus_two_stage };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::mh: return "mh";
    case Method::parallel_mh: return "parallel-mh";
    case Method::subsample: return "subsample";
    case Method::two_stage: return "two-stage";
    case Method::consensus: return "consensus";
    case Method::consensus_two_stage: return "consensus-two-stage";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::mh, Method::parallel_mh, Method::subsample, Method::two_stage, Method::consensus,
                   Method::consensus_two_stage})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown method '" + s + "'");
}

inline bool is_consensus(Method m) { return m == Method::consensus || m == Method::consensus_two_stage; }
inline bool uses_subsample(Method m) {
  return m == Method::subsample || m == Method::two_stage || m == Method::consensus_two_stage;
}

// Everything needed to reproduce one fit from a single master seed.
struct RunManifest {
  static constexpr int kVersion = 1;

  Method method = Method::mh;

  // Data: a file plus schema, or a synthetic specification.
  std::string data;
  std::string schema;
  std::size_t synthetic_n = 0;
  std::size_t synthetic_l = 5;
  double synthetic_sparsity = 0.046;
  std::optional<std::uint64_t> synthetic_seed;
  std::string synthetic_design = "gaussian";

  double prior_variance = 1000.0;
  std::optional<double> prior_intercept_variance;

  std::size_t iterations = 500000;
  std::size_t burnin = 1000;
  std::size_t thinning = 20;
  bool thinning_configured = false;  // false: the preset above applies
  std::uint64_t seed = 1;

  std::size_t subsample_size = 0;
  double subsample_fraction = 0.0;
  // Unset: subsample re-draws every iteration, two-stage variants keep one subsample.
  std::optional<std::size_t> refresh_every;
  std::size_t partitions = 0;
  std::size_t workers = 1;

  std::string proposal = "laplace";  // laplace | isotropic
  double proposal_variance = 0.01;
  bool adapt = true;

  std::string output;

  bool synthetic() const noexcept { return data.empty(); }

  std::size_t effective_refresh() const {
    if (refresh_every) return *refresh_every;
    return method == Method::subsample ? 1 : 0;
  }

  void validate() const {
    if (synthetic() && synthetic_n == 0) throw ConfigError("manifest needs either data + schema or synthetic_n");
    if (!synthetic() && schema.empty()) throw ConfigError("data file given without a schema");
    if (is_consensus(method) && partitions == 0) throw ConfigError("method " + to_string(method) + " requires partitions");
    if (!is_consensus(method) && partitions != 0)
      throw ConfigError("partitions only apply to consensus methods, not " + to_string(method));
    const bool has_a = subsample_size > 0 || subsample_fraction > 0.0;
    if (uses_subsample(method) && !has_a)
      throw ConfigError("method " + to_string(method) + " requires subsample_size or subsample_fraction");
    if (!uses_subsample(method) && has_a)
      throw ConfigError("subsample settings do not apply to method " + to_string(method));
    if (subsample_size > 0 && subsample_fraction > 0.0)
      throw ConfigError("give subsample_size or subsample_fraction, not both");
    if (subsample_fraction < 0.0 || subsample_fraction > 1.0) throw ConfigError("subsample_fraction must lie in (0, 1]");
    if (method == Method::mh && workers != 1) throw ConfigError("method mh runs single-worker; use parallel-mh");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (proposal != "laplace" && proposal != "isotropic") throw ConfigError("proposal must be laplace or isotropic");
    if (!(prior_variance > 0.0)) throw ConfigError("prior_variance must be positive");
    if (iterations == 0 || burnin >= iterations || thinning == 0)
      throw ConfigError("need iterations > burnin and thinning >= 1");
  }

  void set(const std::string& key, const std::string& value) {
    auto count = [&]() -> std::size_t {
      std::uint64_t v = 0;
      const auto* end = value.data() + value.size();
      const auto res = std::from_chars(value.data(), end, v);
      if (value.empty() || res.ec != std::errc() || res.ptr != end)
        throw ConfigError("manifest key '" + key + "' expects a non-negative integer, got '" + value + "'");
      return static_cast<std::size_t>(v);
    };
    auto real = [&]() {
      const auto v = text::parse_double(value);
      if (!v) throw ConfigError("manifest key '" + key + "' expects a number, got '" + value + "'");
      return *v;
    };
    if (key == "manifest_version") {
      if (value != std::to_string(kVersion)) throw ConfigError("unsupported manifest_version " + value);
    } else if (key == "method") method = parse_method(value);
    else if (key == "data") data = value;
    else if (key == "schema") schema = value;
    else if (key == "synthetic_n") synthetic_n = count();
    else if (key == "synthetic_l") synthetic_l = count();
    else if (key == "synthetic_sparsity") synthetic_sparsity = real();
    else if (key == "synthetic_seed") synthetic_seed = count();
    else if (key == "synthetic_design") synthetic_design = value;
    else if (key == "prior_variance") prior_variance = real();
    else if (key == "prior_intercept_variance") prior_intercept_variance = real();
    else if (key == "iterations") iterations = count();
    else if (key == "burnin") burnin = count();
    else if (key == "thinning") {
      thinning = count();
      thinning_configured = true;
    } else if (key == "seed") seed = count();
    else if (key == "subsample_size") subsample_size = count();
    else if (key == "subsample_fraction") subsample_fraction = real();
    else if (key == "refresh_every") refresh_every = count();
    else if (key == "partitions") partitions = count();
    else if (key == "workers") workers = count();
    else if (key == "proposal") proposal = value;
    else if (key == "proposal_variance") proposal_variance = real();
    else if (key == "adapt") adapt = text::parse_bool(value);
    else if (key == "output") output = value;
    else throw ConfigError("unknown manifest key '" + key + "'");
  }

  static RunManifest parse(const std::string& content, const std::string& origin = "<manifest>") {
    const auto kv = text::KeyValueFile::parse(content, origin);
    if (!kv.get("manifest_version")) throw ConfigError(origin + ": missing manifest_version");
    RunManifest m;
    for (const auto& [k, v] : kv.entries) m.set(k, v);
    return m;
  }

  static RunManifest read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  std::string serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "manifest_version = " << kVersion << "\n";
    os << "method = " << to_string(method) << "\n";
    if (!data.empty()) os << "data = " << data << "\nschema = " << schema << "\n";
    if (synthetic()) {
      os << "synthetic_n = " << synthetic_n << "\nsynthetic_l = " << synthetic_l
         << "\nsynthetic_sparsity = " << synthetic_sparsity << "\nsynthetic_design = " << synthetic_design << "\n";
      if (synthetic_seed) os << "synthetic_seed = " << *synthetic_seed << "\n";
    }
    os << "prior_variance = " << prior_variance << "\n";
    if (prior_intercept_variance) os << "prior_intercept_variance = " << *prior_intercept_variance << "\n";
    os << "iterations = " << iterations << "\nburnin = " << burnin << "\nthinning = " << thinning
       << "\nseed = " << seed << "\n";
    if (subsample_size) os << "subsample_size = " << subsample_size << "\n";
    if (subsample_fraction > 0.0) os << "subsample_fraction = " << subsample_fraction << "\n";
    if (refresh_every) os << "refresh_every = " << *refresh_every << "\n";
    if (partitions) os << "partitions = " << partitions << "\n";
    os << "workers = " << workers << "\nproposal = " << proposal << "\nproposal_variance = " << proposal_variance
       << "\nadapt = " << (adapt ? "true" : "false") << "\n";
    if (!output.empty()) os << "output = " << output << "\n";
    return os.str();
  }
};

}  // namespace logitmc

#endif  // LOGITMC_MANIFEST_HPP_
