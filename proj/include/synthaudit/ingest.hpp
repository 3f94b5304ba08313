#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "synthaudit/dependence.hpp"
#include "synthaudit/error.hpp"
#include "synthaudit/rng.hpp"
#include "synthaudit/table.hpp"
#include "synthaudit/text.hpp"

namespace synthaudit::ingest {

// ---------------------------------------------------------------------------
// Schema documents
//
// A schema is a flat key-value document. `name` opens a new column; the
// `kind` and `levels` lines that follow belong to it. `target` and `drop` may
// appear anywhere.
//
//   target = income
//   drop   = fnlwgt, education
//   name   = age
//   kind   = continuous
//   name   = sex
//   kind   = categorical
//   levels = Female, Male
// ---------------------------------------------------------------------------

inline TableSchema parse_schema(std::istream& in) {
  TableSchema schema;
  for (const auto& [key, value] : parse_key_values(in)) {
    if (key == "name") {
      schema.columns.push_back(ColumnSpec{value, ColumnKind::continuous, {}});
    } else if (key == "kind") {
      require(!schema.columns.empty(), ErrorCode::invalid_input, "'kind' before any 'name'");
      schema.columns.back().kind = parse_column_kind(value);
    } else if (key == "levels") {
      require(!schema.columns.empty(), ErrorCode::invalid_input, "'levels' before any 'name'");
      schema.columns.back().levels = split_list(value);
    } else if (key == "target") {
      schema.target = value;
    } else if (key == "drop") {
      for (auto& d : split_list(value)) schema.drop_list.push_back(std::move(d));
    } else {
      fail(ErrorCode::invalid_input, "unknown schema key '" + key + "'");
    }
  }
  schema.validate();
  return schema;
}

inline TableSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open schema '" + path + "'");
  return parse_schema(in);
}

inline void write_schema(std::ostream& out, const TableSchema& schema) {
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
  };
  if (schema.target) out << "target = " << *schema.target << '\n';
  if (!schema.drop_list.empty()) out << "drop = " << join(schema.drop_list) << '\n';
  for (const auto& c : schema.columns) {
    out << "name = " << c.name << '\n' << "kind = " << to_string(c.kind) << '\n';
    if (!c.levels.empty()) out << "levels = " << join(c.levels) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Parsing and cleaning
// ---------------------------------------------------------------------------

enum class RejectReason { wrong_field_count, header_echo, coercion_failure, unknown_category };

inline std::string to_string(RejectReason r) {
  switch (r) {
    case RejectReason::wrong_field_count: return "wrong_field_count";
    case RejectReason::header_echo: return "header_echo";
    case RejectReason::coercion_failure: return "coercion_failure";
    case RejectReason::unknown_category: return "unknown_category";
  }
  return "unknown";
}

inline constexpr RejectReason kAllReasons[] = {RejectReason::wrong_field_count, RejectReason::header_echo,
                                               RejectReason::coercion_failure, RejectReason::unknown_category};

struct Rejection {
  std::size_t record;  // 1-based data record number (header excluded)
  RejectReason reason;
};

/// Accounting for a cleaning pass. n_dropped + n_remaining == n_input and
/// n_dropped equals the total count over reasons.
struct RejectionLog {
  std::size_t n_input = 0;
  std::size_t n_dropped = 0;
  std::size_t n_remaining = 0;
  std::map<RejectReason, std::size_t> reasons;
  std::vector<Rejection> rejected;

  std::size_t count(RejectReason r) const {
    auto it = reasons.find(r);
    return it == reasons.end() ? 0 : it->second;
  }
};

/// Continuous coercion: the whole trimmed field must be a finite decimal or
/// scientific literal, an optional leading '+' allowed.
inline std::optional<double> coerce_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct ParseResult {
  ColumnTable table;
  RejectionLog log;
};

/// Reads CSV records against `schema`. A first record equal to the column
/// names is consumed as the header; later copies are rejected as header echoes.
/// Blank lines are skipped and not counted.
inline ParseResult parse_and_validate(std::istream& csv_source, const TableSchema& schema) {
  schema.validate();
  require(!csv_source.bad(), ErrorCode::io, "unreadable CSV source");
  const std::size_t p = schema.size();
  std::vector<ColumnData> cols(p);
  RejectionLog log;

  auto is_header = [&](const std::vector<std::string>& f) {
    if (f.size() != p) return false;
    for (std::size_t j = 0; j < p; ++j)
      if (f[j] != schema.columns[j].name) return false;
    return true;
  };

  csv::Reader reader(csv_source);
  std::vector<std::string> fields;
  bool first = true;
  std::vector<double> nums(p);
  std::vector<std::int32_t> codes(p);
  while (reader.next(fields)) {
    if (fields.empty()) continue;
    for (auto& f : fields) f = trim(f);
    if (first) {
      first = false;
      if (is_header(fields)) continue;
    }
    ++log.n_input;

    std::optional<RejectReason> reason;
    if (fields.size() != p) {
      reason = RejectReason::wrong_field_count;
    } else if (is_header(fields)) {
      reason = RejectReason::header_echo;
    } else {
      for (std::size_t j = 0; j < p && !reason; ++j) {
        if (fields[j].empty()) {
          reason = RejectReason::coercion_failure;
        } else if (!schema.columns[j].discrete()) {
          const auto v = coerce_number(fields[j]);
          if (!v) reason = RejectReason::coercion_failure;
          else nums[j] = *v;
        }
      }
      for (std::size_t j = 0; j < p && !reason; ++j) {
        if (!schema.columns[j].discrete()) continue;
        const auto c = schema.columns[j].code_of(fields[j]);
        if (!c) reason = RejectReason::unknown_category;
        else codes[j] = *c;
      }
    }
    if (reason) {
      ++log.n_dropped;
      ++log.reasons[*reason];
      log.rejected.push_back({log.n_input, *reason});
      continue;
    }
    for (std::size_t j = 0; j < p; ++j) {
      if (schema.columns[j].discrete()) cols[j].codes.push_back(codes[j]);
      else cols[j].values.push_back(nums[j]);
    }
    ++log.n_remaining;
  }
  require(!csv_source.bad(), ErrorCode::io, "read error in CSV source");
  require(log.n_remaining > 0, ErrorCode::empty_dataset,
          "no valid rows (" + std::to_string(log.n_input) + " read, all rejected)");
  return {ColumnTable(schema, std::move(cols)), std::move(log)};
}

inline ParseResult load_csv(const std::string& path, const TableSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open '" + path + "'");
  try {
    return parse_and_validate(in, schema);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " [" + path + "]");
  }
}

inline void write_csv(std::ostream& out, const ColumnTable& table) {
  std::vector<std::string> row;
  for (std::size_t j = 0; j < table.n_cols(); ++j) row.push_back(table.spec(j).name);
  csv::write_row(out, row);
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    row.clear();
    for (std::size_t j = 0; j < table.n_cols(); ++j) row.push_back(table.cell_text(r, j));
    csv::write_row(out, row);
  }
}

// ---------------------------------------------------------------------------
// Encodings
// ---------------------------------------------------------------------------

/// n_rows x p numeric matrix: continuous values pass through, discrete columns
/// become their 0-based level index.
inline Eigen::MatrixXd label_encode(const ColumnTable& table) {
  require(table.n_rows() > 0, ErrorCode::invalid_input, "label_encode of an empty table");
  Eigen::MatrixXd x(table.n_rows(), table.n_cols());
  for (std::size_t j = 0; j < table.n_cols(); ++j)
    for (std::size_t r = 0; r < table.n_rows(); ++r) x(r, j) = table.numeric(r, j);
  return x;
}

/// Replaces each categorical column with at most `max_cardinality` declared
/// levels (and not listed in `keep`) by 0/1 ordinal indicator columns named
/// "<col>=<level>".
inline ColumnTable one_hot_encode(const ColumnTable& table, std::size_t max_cardinality = 10,
                                  const std::vector<std::string>& keep = {}) {
  require(max_cardinality >= 2, ErrorCode::invalid_input, "max_cardinality must be >= 2");
  TableSchema schema;
  schema.target = table.schema().target;
  std::vector<ColumnData> cols;
  for (std::size_t j = 0; j < table.n_cols(); ++j) {
    const auto& spec = table.spec(j);
    const bool kept = std::find(keep.begin(), keep.end(), spec.name) != keep.end();
    if (spec.kind != ColumnKind::categorical || spec.levels.size() > max_cardinality || kept) {
      schema.columns.push_back(spec);
      cols.push_back(table.column(j));
      continue;
    }
    for (std::size_t l = 0; l < spec.levels.size(); ++l) {
      schema.columns.push_back(ColumnSpec{spec.name + "=" + spec.levels[l], ColumnKind::ordinal, {"0", "1"}});
      ColumnData d;
      d.codes.reserve(table.n_rows());
      for (auto c : table.column(j).codes) d.codes.push_back(static_cast<std::size_t>(c) == l ? 1 : 0);
      cols.push_back(std::move(d));
    }
  }
  return ColumnTable(std::move(schema), std::move(cols));
}

// ---------------------------------------------------------------------------
// Splitting and resampling
// ---------------------------------------------------------------------------

struct Split {
  ColumnTable train;
  ColumnTable test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

/// Seeded random partition; |train| = round(fraction * n). Both parts keep
/// the input row order.
inline Split split_train_test(const ColumnTable& table, double fraction, std::uint64_t seed) {
  require(fraction > 0 && fraction < 1, ErrorCode::invalid_split, "fraction must lie in (0, 1)");
  const std::size_t n = table.n_rows();
  require(n >= 2, ErrorCode::invalid_split, "need at least 2 rows to split");
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  require(n_train > 0 && n_train < n, ErrorCode::invalid_split,
          "fraction " + format_number(fraction) + " leaves an empty part of " + std::to_string(n) + " rows");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[uniform_index(rng, i + 1)]);
  Split s;
  s.train_rows.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test_rows.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(s.train_rows.begin(), s.train_rows.end());
  std::sort(s.test_rows.begin(), s.test_rows.end());
  s.train = table.take_rows(s.train_rows);
  s.test = table.take_rows(s.test_rows);
  return s;
}

/// n rows drawn uniformly with replacement.
inline ColumnTable resample(const ColumnTable& table, std::size_t n, std::uint64_t seed) {
  require(table.n_rows() > 0, ErrorCode::invalid_input, "cannot resample an empty table");
  require(n >= 1, ErrorCode::invalid_input, "resample size must be >= 1");
  Rng rng(seed);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = uniform_index(rng, table.n_rows());
  return table.take_rows(idx);
}

/// Each column permuted independently: marginals kept, dependence destroyed.
inline ColumnTable shuffle_columns(const ColumnTable& table, std::uint64_t seed) {
  std::vector<ColumnData> cols = table.columns();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    Rng rng(derive_seed(seed, j));
    auto shuffle = [&](auto& v) {
      for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
    };
    if (table.spec(j).discrete()) shuffle(cols[j].codes);
    else shuffle(cols[j].values);
  }
  return ColumnTable(table.schema(), std::move(cols));
}

// ---------------------------------------------------------------------------
// Column pruning
// ---------------------------------------------------------------------------

struct PrunedTable {
  ColumnTable table;
  std::vector<std::string> dropped;  // drop_list first, then co-linear columns
};

/// Removes the schema drop list, then scans columns left to right and drops a
/// column whose effect size with any earlier kept column is >= threshold. The
/// target column is never the one removed.
inline PrunedTable drop_colinear(const ColumnTable& table, double threshold, std::size_t n_bins = 10,
                                 dependence::EffectSizeDf mode = dependence::EffectSizeDf::min) {
  require(threshold > 0 && threshold <= 1, ErrorCode::invalid_input, "threshold must lie in (0, 1]");
  PrunedTable out;
  out.dropped = table.schema().drop_list;
  const ColumnTable base = table.without_columns(out.dropped);
  const std::size_t p = base.n_cols();
  if (p < 2) {
    out.table = base;
    return out;
  }
  const auto d = dependence::discretize(base, n_bins);
  const auto& target = base.schema().target;
  auto is_target = [&](std::size_t j) { return target && base.spec(j).name == *target; };
  std::vector<bool> dropped(p, false);
  for (std::size_t j = 1; j < p; ++j) {
    for (std::size_t i = 0; i < j && !dropped[j]; ++i) {
      if (dropped[i]) continue;
      const auto es = dependence::effect_size(dependence::contingency(d.codes[i], d.codes[j]), mode);
      if (!es || *es < threshold) continue;
      if (is_target(j)) dropped[i] = true;
      else dropped[j] = true;
    }
  }
  std::vector<std::string> colinear;
  for (std::size_t j = 0; j < p; ++j)
    if (dropped[j]) colinear.push_back(base.spec(j).name);
  out.table = base.without_columns(colinear);
  out.dropped.insert(out.dropped.end(), colinear.begin(), colinear.end());
  return out;
}

}  // namespace synthaudit::ingest
