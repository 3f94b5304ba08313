#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "synthaudit/error.hpp"

namespace synthaudit {

enum class ColumnKind { continuous, ordinal, categorical };

inline std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::ordinal: return "ordinal";
    case ColumnKind::categorical: return "categorical";
  }
  return "unknown";
}

inline ColumnKind parse_column_kind(const std::string& s) {
  if (s == "continuous") return ColumnKind::continuous;
  if (s == "ordinal") return ColumnKind::ordinal;
  if (s == "categorical") return ColumnKind::categorical;
  fail(ErrorCode::invalid_input, "unknown column kind '" + s + "'");
}

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// One declared column. `levels` holds the category vocabulary for
/// categorical columns and the ordered level list for ordinal columns; it is
/// empty for continuous columns.
struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::vector<std::string> levels;

  bool discrete() const { return kind != ColumnKind::continuous; }

  std::optional<std::int32_t> code_of(const std::string& value) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (levels[i] == value) return static_cast<std::int32_t>(i);
    return std::nullopt;
  }

  bool operator==(const ColumnSpec&) const = default;
};

struct TableSchema {
  std::vector<ColumnSpec> columns;
  std::optional<std::string> target;
  std::vector<std::string> drop_list;

  std::size_t size() const { return columns.size(); }

  std::optional<std::size_t> index_of(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name == name) return i;
    return std::nullopt;
  }

  /// Throws invalid_input when a structural invariant is broken.
  void validate() const {
    require(!columns.empty(), ErrorCode::invalid_input, "schema has no columns");
    std::set<std::string> seen;
    for (const auto& c : columns) {
      require(!c.name.empty(), ErrorCode::invalid_input, "column with empty name");
      require(seen.insert(c.name).second, ErrorCode::invalid_input, "duplicate column '" + c.name + "'");
      if (c.kind == ColumnKind::continuous) {
        require(c.levels.empty(), ErrorCode::invalid_input, "continuous column '" + c.name + "' declares levels");
      } else {
        require(!c.levels.empty(), ErrorCode::invalid_input, "column '" + c.name + "' has no levels");
        std::set<std::string> lv(c.levels.begin(), c.levels.end());
        require(lv.size() == c.levels.size(), ErrorCode::invalid_input,
                "column '" + c.name + "' repeats a level");
      }
    }
    if (target)
      require(index_of(*target).has_value(), ErrorCode::invalid_input, "target '" + *target + "' is not a column");
    for (const auto& d : drop_list)
      require(index_of(d).has_value(), ErrorCode::invalid_input, "drop column '" + d + "' is not a column");
  }

  bool operator==(const TableSchema&) const = default;
};

/// Typed column storage: `values` is used by continuous columns, `codes` by
/// ordinal and categorical columns (0-based index into the column's levels).
struct ColumnData {
  std::vector<double> values;
  std::vector<std::int32_t> codes;

  bool operator==(const ColumnData&) const = default;
};

/// Immutable-after-construction columnar dataset; all column arrays have
/// length n_rows and every code indexes into its column's levels.
class ColumnTable {
 public:
  ColumnTable() = default;

  ColumnTable(TableSchema schema, std::vector<ColumnData> columns)
      : schema_(std::move(schema)), columns_(std::move(columns)) {
    require(columns_.size() == schema_.size(), ErrorCode::invalid_input, "column count does not match schema");
    n_rows_ = columns_.empty() ? 0 : length(0);
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      require(length(j) == n_rows_, ErrorCode::invalid_input, "ragged column '" + schema_.columns[j].name + "'");
      const auto& spec = schema_.columns[j];
      if (spec.discrete()) {
        for (auto c : columns_[j].codes)
          require(c >= 0 && static_cast<std::size_t>(c) < spec.levels.size(), ErrorCode::invalid_input,
                  "code out of range in column '" + spec.name + "'");
      }
    }
  }

  const TableSchema& schema() const { return schema_; }
  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return columns_.size(); }
  const ColumnSpec& spec(std::size_t j) const { return schema_.columns[j]; }
  const ColumnData& column(std::size_t j) const { return columns_[j]; }
  const std::vector<ColumnData>& columns() const { return columns_; }

  /// Numeric view of cell (row, col): the value for continuous columns, the
  /// code for discrete ones.
  double numeric(std::size_t row, std::size_t col) const {
    return spec(col).discrete() ? static_cast<double>(columns_[col].codes[row]) : columns_[col].values[row];
  }

  /// Rows at `indices`, in that order (repeats allowed).
  ColumnTable take_rows(const std::vector<std::size_t>& indices) const {
    std::vector<ColumnData> out(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (spec(j).discrete()) {
        out[j].codes.reserve(indices.size());
        for (auto r : indices) out[j].codes.push_back(columns_[j].codes.at(r));
      } else {
        out[j].values.reserve(indices.size());
        for (auto r : indices) out[j].values.push_back(columns_[j].values.at(r));
      }
    }
    return ColumnTable(schema_, std::move(out));
  }

  /// Keeps only the named columns, in schema order.
  ColumnTable without_columns(const std::vector<std::string>& names) const {
    const std::set<std::string> drop(names.begin(), names.end());
    TableSchema schema;
    std::vector<ColumnData> cols;
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (drop.count(spec(j).name)) continue;
      schema.columns.push_back(spec(j));
      cols.push_back(columns_[j]);
    }
    if (schema_.target && !drop.count(*schema_.target)) schema.target = schema_.target;
    for (const auto& d : schema_.drop_list)
      if (!drop.count(d)) schema.drop_list.push_back(d);
    return ColumnTable(std::move(schema), std::move(cols));
  }

  /// Text form of a cell: the level name for discrete columns, the shortest
  /// round-tripping decimal for continuous ones.
  std::string cell_text(std::size_t row, std::size_t col) const {
    if (spec(col).discrete()) return spec(col).levels[columns_[col].codes[row]];
    return format_number(columns_[col].values[row]);
  }

  bool operator==(const ColumnTable&) const = default;

 private:
  std::size_t length(std::size_t j) const {
    return schema_.columns[j].discrete() ? columns_[j].codes.size() : columns_[j].values.size();
  }

  TableSchema schema_;
  std::vector<ColumnData> columns_;
  std::size_t n_rows_ = 0;
};

}  // namespace synthaudit
