#ifndef LOGITMC_DATA_IO_HPP_
#define LOGITMC_DATA_IO_HPP_

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "logitmc/error.hpp"
#include "logitmc/model.hpp"

namespace logitmc {

namespace text {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Comma split with double-quote support ("" escapes a quote).
inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

inline std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    auto item = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return v;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

// `key = value` lines; '#' starts a comment. Repeated keys keep every value.
struct KeyValueFile {
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::size_t> lines;

  static KeyValueFile read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  static KeyValueFile parse(const std::string& content, const std::string& origin) {
    KeyValueFile kv;
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw ParseError(origin, lineno, "expected 'key = value'");
      kv.entries.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
      kv.lines.push_back(lineno);
    }
    return kv;
  }

  std::optional<std::string> get(const std::string& key) const {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it)
      if (it->first == key) return it->second;
    return std::nullopt;
  }

  std::vector<std::string> all(const std::string& key) const {
    std::vector<std::string> v;
    for (const auto& [k, val] : entries)
      if (k == key) v.push_back(val);
    return v;
  }
};

}  // namespace text

struct CategoricalFeature {
  std::string column;
  std::string reference;
  std::vector<std::string> levels;  // includes the reference level
};

enum class UnknownLevelPolicy { drop, abort };

// Declarative mapping from a delimited file to a design matrix. Categoricals
// use reference-level dummy coding: one indicator per non-reference level.
struct SchemaSpec {
  static constexpr int kVersion = 1;

  std::string response;
  std::string positive_label = "1";
  std::vector<std::string> numeric;
  std::vector<CategoricalFeature> categorical;
  bool intercept = true;
  UnknownLevelPolicy unknown_level = UnknownLevelPolicy::drop;

  std::size_t width() const {
    std::size_t l = (intercept ? 1 : 0) + numeric.size();
    for (const auto& c : categorical) l += c.levels.size() - 1;
    return l;
  }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> names;
    if (intercept) names.push_back("intercept");
    for (const auto& n : numeric) names.push_back(n);
    for (const auto& c : categorical)
      for (const auto& lvl : c.levels)
        if (lvl != c.reference) names.push_back(c.column + "=" + lvl);
    return names;
  }

  void validate() const {
    if (response.empty()) throw ConfigError("schema has no response column");
    std::vector<std::string> seen{response};
    auto add = [&](const std::string& col) {
      if (std::find(seen.begin(), seen.end(), col) != seen.end())
        throw ConfigError("column '" + col + "' used twice in schema");
      seen.push_back(col);
    };
    for (const auto& n : numeric) add(n);
    for (const auto& c : categorical) {
      add(c.column);
      if (c.levels.size() < 2) throw ConfigError("categorical '" + c.column + "' needs at least two levels");
      if (std::find(c.levels.begin(), c.levels.end(), c.reference) == c.levels.end())
        throw ConfigError("reference level '" + c.reference + "' not among levels of '" + c.column + "'");
    }
    if (width() == 0) throw ConfigError("schema produces an empty design matrix");
  }

  // Grammar (version 1):
  //   schema_version = 1
  //   response = <column>
  //   positive = <label>                    (default "1")
  //   intercept = true|false                (default true)
  //   numeric = <column>[, <column> ...]    (repeatable)
  //   categorical = <column> | <reference> | <level>, <level>, ...   (repeatable)
  //   unknown_level = drop|abort            (default drop)
  static SchemaSpec parse(const std::string& content, const std::string& origin = "<schema>") {
    const auto kv = text::KeyValueFile::parse(content, origin);
    const auto version = kv.get("schema_version");
    if (!version) throw ConfigError(origin + ": missing schema_version");
    if (*version != std::to_string(kVersion))
      throw ConfigError(origin + ": unsupported schema_version " + *version);
    SchemaSpec s;
    for (std::size_t i = 0; i < kv.entries.size(); ++i) {
      const auto& [key, value] = kv.entries[i];
      if (key == "schema_version") {
      } else if (key == "response") {
        s.response = value;
      } else if (key == "positive") {
        s.positive_label = value;
      } else if (key == "intercept") {
        s.intercept = text::parse_bool(value);
      } else if (key == "numeric") {
        for (auto& c : text::split_list(value, ',')) s.numeric.push_back(c);
      } else if (key == "categorical") {
        const auto parts = text::split_list(value, '|');
        if (parts.size() != 3) throw ParseError(origin, kv.lines[i], "categorical needs 'column | reference | levels'");
        s.categorical.push_back({parts[0], parts[1], text::split_list(parts[2], ',')});
      } else if (key == "unknown_level") {
        if (value == "drop") s.unknown_level = UnknownLevelPolicy::drop;
        else if (value == "abort") s.unknown_level = UnknownLevelPolicy::abort;
        else throw ParseError(origin, kv.lines[i], "unknown_level must be drop or abort");
      } else {
        throw ParseError(origin, kv.lines[i], "unknown schema key '" + key + "'");
      }
    }
    s.validate();
    return s;
  }

  static SchemaSpec read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  std::string serialize() const {
    std::ostringstream os;
    os << "schema_version = " << kVersion << "\n";
    os << "response = " << response << "\n";
    os << "positive = " << positive_label << "\n";
    os << "intercept = " << (intercept ? "true" : "false") << "\n";
    for (const auto& n : numeric) os << "numeric = " << n << "\n";
    for (const auto& c : categorical) {
      os << "categorical = " << c.column << " | " << c.reference << " | ";
      for (std::size_t k = 0; k < c.levels.size(); ++k) os << (k ? ", " : "") << c.levels[k];
      os << "\n";
    }
    os << "unknown_level = " << (unknown_level == UnknownLevelPolicy::drop ? "drop" : "abort") << "\n";
    return os.str();
  }
};

struct IngestResult {
  Dataset data;
  std::size_t rows_read = 0;
  std::size_t dropped_missing = 0;
  std::size_t dropped_unknown_level = 0;
};

inline bool is_missing(const std::string& v) { return v.empty() || v == "NA" || v == "na" || v == "?"; }

inline IngestResult ingest(std::istream& in, const SchemaSpec& schema, const std::string& origin = "<input>") {
  schema.validate();
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw DataError(origin + ": empty file, header row required");
  const auto header = text::split_csv(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(origin + ": unknown column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t response_col = column(schema.response);
  std::vector<std::size_t> numeric_cols;
  for (const auto& n : schema.numeric) numeric_cols.push_back(column(n));
  std::vector<std::size_t> cat_cols;
  for (const auto& c : schema.categorical) cat_cols.push_back(column(c.column));

  const std::size_t l = schema.width();
  std::vector<double> values;
  std::vector<std::uint8_t> y;
  std::size_t rows_read = 0, dropped_missing = 0, dropped_unknown = 0;
  std::vector<double> row(l);
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    ++rows_read;
    const auto fields = text::split_csv(line);
    if (fields.size() != header.size())
      throw ParseError(origin, lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                                           std::to_string(fields.size()));
    bool missing = is_missing(fields[response_col]);
    for (auto c : numeric_cols) missing = missing || is_missing(fields[c]);
    for (auto c : cat_cols) missing = missing || is_missing(fields[c]);
    if (missing) {
      ++dropped_missing;
      continue;
    }
    std::size_t k = 0;
    if (schema.intercept) row[k++] = 1.0;
    for (std::size_t j = 0; j < numeric_cols.size(); ++j) {
      const auto v = text::parse_double(fields[numeric_cols[j]]);
      if (!v || !std::isfinite(*v))
        throw ParseError(origin, lineno, "column '" + schema.numeric[j] + "' value '" + fields[numeric_cols[j]] +
                                             "' is not a finite number");
      row[k++] = *v;
    }
    bool unknown = false;
    for (std::size_t j = 0; j < cat_cols.size() && !unknown; ++j) {
      const auto& cat = schema.categorical[j];
      const auto& value = fields[cat_cols[j]];
      if (std::find(cat.levels.begin(), cat.levels.end(), value) == cat.levels.end()) {
        if (schema.unknown_level == UnknownLevelPolicy::abort)
          throw ParseError(origin, lineno, "unknown level '" + value + "' for '" + cat.column + "'");
        unknown = true;
        break;
      }
      for (const auto& lvl : cat.levels)
        if (lvl != cat.reference) row[k++] = value == lvl ? 1.0 : 0.0;
    }
    if (unknown) {
      ++dropped_unknown;
      continue;
    }
    values.insert(values.end(), row.begin(), row.end());
    y.push_back(fields[response_col] == schema.positive_label ? 1 : 0);
  }
  if (y.empty()) throw DataError(origin + ": no usable rows after dropping missing values and unknown levels");
  RowMatrix X = Eigen::Map<RowMatrix>(values.data(), static_cast<Eigen::Index>(y.size()),
                                      static_cast<Eigen::Index>(l));
  return IngestResult{Dataset(std::move(X), std::move(y), schema.feature_names()), rows_read, dropped_missing,
                      dropped_unknown};
}

inline IngestResult ingest(const std::string& path, const SchemaSpec& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path);
  return ingest(in, schema, path);
}

// Writes a dataset as CSV (features then `y`), 17 significant digits.
inline void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out.precision(17);
  for (const auto& name : data.feature_names()) out << name << ",";
  out << "y\n";
  const auto& X = data.X();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) out << X(i, j) << ",";
    out << static_cast<int>(data.y()[static_cast<std::size_t>(i)]) << "\n";
  }
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace logitmc

#endif  // LOGITMC_DATA_IO_HPP_
