#ifndef LOGITMC_CHAIN_IO_HPP_
#define LOGITMC_CHAIN_IO_HPP_

#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "logitmc/chain.hpp"
#include "logitmc/data_io.hpp"
#include "logitmc/diagnostics.hpp"
#include "logitmc/error.hpp"

namespace logitmc {

inline constexpr int kChainFormatVersion = 1;

inline std::string draws_path(const std::string& stem) { return stem + ".draws.csv"; }
inline std::string meta_path(const std::string& stem) { return stem + ".meta.txt"; }

namespace detail {

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.precision(17);
  return out;
}

inline std::size_t parse_count(const text::KeyValueFile& kv, const std::string& key, const std::string& path) {
  const auto v = kv.get(key);
  if (!v) throw DataError(path + ": missing key '" + key + "'");
  try {
    std::size_t pos = 0;
    const auto r = std::stoull(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument(key);
    return static_cast<std::size_t>(r);
  } catch (const std::exception&) {
    throw DataError(path + ": key '" + key + "' is not a count: '" + *v + "'");
  }
}

inline double parse_real(const text::KeyValueFile& kv, const std::string& key, const std::string& path) {
  const auto v = kv.get(key);
  if (!v) throw DataError(path + ": missing key '" + key + "'");
  const auto d = text::parse_double(*v);
  if (!d) throw DataError(path + ": key '" + key + "' is not a number: '" + *v + "'");
  return *d;
}

inline const char* kCounterKeys[] = {"iterations", "stage1_proposals", "stage1_promotions", "stage2_accepts",
                                     "exact_evals", "approx_evals"};

}  // namespace detail

// `<stem>.draws.csv`: header of coefficient names, one kept draw per row.
// `<stem>.meta.txt`: `key = value` lines with counters, timing and run metadata.
inline void write_chain(const ChainOutput& chain, const std::string& stem) {
  {
    auto out = detail::open_for_write(draws_path(stem));
    for (std::size_t j = 0; j < chain.names.size(); ++j) out << (j ? "," : "") << chain.names[j];
    out << "\n";
    for (Eigen::Index i = 0; i < chain.draws.rows(); ++i) {
      for (Eigen::Index j = 0; j < chain.draws.cols(); ++j) out << (j ? "," : "") << chain.draws(i, j);
      out << "\n";
    }
    if (!out) throw DataError("write failed for " + draws_path(stem));
  }
  auto out = detail::open_for_write(meta_path(stem));
  out << "chain_format_version = " << kChainFormatVersion << "\n";
  out << "method = " << chain.method_tag << "\n";
  out << "kept = " << chain.kept() << "\n";
  out << "iterations = " << chain.iterations << "\n";
  out << "stage1_proposals = " << chain.stage1_proposals << "\n";
  out << "stage1_promotions = " << chain.stage1_promotions << "\n";
  out << "stage2_accepts = " << chain.stage2_accepts << "\n";
  out << "stage2_prob_sum = " << chain.stage2_prob_sum << "\n";
  out << "exact_evals = " << chain.exact_evals << "\n";
  out << "approx_evals = " << chain.approx_evals << "\n";
  out << "wall_seconds = " << chain.wall_seconds << "\n";
  for (const auto& [k, v] : chain.meta) out << "meta." << k << " = " << v << "\n";
  if (!out) throw DataError("write failed for " + meta_path(stem));
}

inline ChainOutput read_chain(const std::string& stem) {
  ChainOutput chain;
  const std::string mpath = meta_path(stem);
  const auto kv = text::KeyValueFile::read(mpath);
  const auto version = kv.get("chain_format_version");
  if (!version || *version != std::to_string(kChainFormatVersion))
    throw DataError(mpath + ": unsupported or missing chain_format_version");
  chain.method_tag = kv.get("method").value_or("");
  chain.iterations = detail::parse_count(kv, "iterations", mpath);
  chain.stage1_proposals = detail::parse_count(kv, "stage1_proposals", mpath);
  chain.stage1_promotions = detail::parse_count(kv, "stage1_promotions", mpath);
  chain.stage2_accepts = detail::parse_count(kv, "stage2_accepts", mpath);
  chain.stage2_prob_sum = detail::parse_real(kv, "stage2_prob_sum", mpath);
  chain.exact_evals = detail::parse_count(kv, "exact_evals", mpath);
  chain.approx_evals = detail::parse_count(kv, "approx_evals", mpath);
  chain.wall_seconds = detail::parse_real(kv, "wall_seconds", mpath);
  for (const auto& [k, v] : kv.entries)
    if (k.rfind("meta.", 0) == 0) chain.meta[k.substr(5)] = v;
  const std::size_t kept = detail::parse_count(kv, "kept", mpath);

  const std::string dpath = draws_path(stem);
  std::ifstream in(dpath);
  if (!in) throw DataError("cannot open " + dpath);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(dpath, 1, "missing header");
  chain.names = text::split_csv(line);
  const auto l = static_cast<Eigen::Index>(chain.names.size());
  std::vector<double> values;
  std::size_t lineno = 1, rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split_csv(line);
    if (static_cast<Eigen::Index>(fields.size()) != l)
      throw ParseError(dpath, lineno, "expected " + std::to_string(l) + " fields, found " + std::to_string(fields.size()));
    for (const auto& f : fields) {
      const auto v = text::parse_double(f);
      if (!v) throw ParseError(dpath, lineno, "'" + f + "' is not a number");
      values.push_back(*v);
    }
    ++rows;
  }
  if (rows != kept)
    throw ParseError(dpath, lineno, "found " + std::to_string(rows) + " draws, metadata says " + std::to_string(kept));
  chain.draws.resize(static_cast<Eigen::Index>(rows), l);
  for (std::size_t i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < l; ++j)
      chain.draws(static_cast<Eigen::Index>(i), j) = values[i * static_cast<std::size_t>(l) + static_cast<std::size_t>(j)];
  return chain;
}

inline void write_summary(const SummaryReport& r, const std::string& path) {
  auto out = detail::open_for_write(path);
  out << "# method = " << r.method << "\n";
  out << "# kept = " << r.kept << "\n";
  out << "# iterations = " << r.iterations << "\n";
  out << "# acceptance_rate = " << r.acceptance_rate << "\n";
  out << "# promotion_rate = " << r.promotion_rate << "\n";
  out << "# stage2_acceptance_rate = " << r.stage2_acceptance_rate << "\n";
  out << "# stage2_mean_probability = " << r.stage2_mean_probability << "\n";
  out << "# exact_evals = " << r.exact_evals << "\n";
  out << "# approx_evals = " << r.approx_evals << "\n";
  out << "# wall_seconds = " << r.wall_seconds << "\n";
  out << "# iterations_per_second = " << r.iterations_per_second << "\n";
  out << "coefficient,mean,sd,q025,q50,q975,ess,mcse\n";
  for (const auto& c : r.coefficients)
    out << c.name << "," << c.mean << "," << c.sd << "," << c.q025 << "," << c.q50 << "," << c.q975 << "," << c.ess
        << "," << c.mcse << "\n";
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace logitmc

#endif  // LOGITMC_CHAIN_IO_HPP_
