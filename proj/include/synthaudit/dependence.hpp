#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synthaudit/error.hpp"
#include "synthaudit/table.hpp"

namespace synthaudit::dependence {

struct Binning {
  std::vector<std::int32_t> codes;
  std::size_t n_bins = 0;  // realized bins after merging duplicate edges
  bool zero_variation = false;
};

/// Equal-frequency binning. Cut points are the nearest-rank quantiles at
/// k/n_bins, k = 1..n_bins-1, deduplicated; a value's bin is the number of cut
/// points strictly below it, then codes are compacted to the occupied bins.
inline Binning bin_continuous(std::span<const double> col, std::size_t n_bins) {
  require(n_bins >= 2, ErrorCode::invalid_input, "n_bins must be >= 2");
  require(!col.empty(), ErrorCode::invalid_input, "cannot bin an empty column");
  std::vector<double> sorted(col.begin(), col.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  Binning out;
  if (sorted.front() == sorted.back()) {
    out.codes.assign(n, 0);
    out.n_bins = 1;
    out.zero_variation = true;
    return out;
  }

  std::vector<double> cuts;
  for (std::size_t k = 1; k < n_bins; ++k) {
    // nearest rank: ceil(k n / n_bins), 1-based
    const std::size_t rank = (k * n + n_bins - 1) / n_bins;
    cuts.push_back(sorted[std::max<std::size_t>(rank, 1) - 1]);
  }
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<std::int32_t> raw(n);
  std::vector<bool> used(cuts.size() + 1, false);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = std::lower_bound(cuts.begin(), cuts.end(), col[i]) - cuts.begin();
    raw[i] = static_cast<std::int32_t>(b);
    used[b] = true;
  }
  std::vector<std::int32_t> remap(used.size(), -1);
  std::int32_t next = 0;
  for (std::size_t b = 0; b < used.size(); ++b)
    if (used[b]) remap[b] = next++;
  out.codes.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.codes[i] = remap[raw[i]];
  out.n_bins = static_cast<std::size_t>(next);
  out.zero_variation = next < 2;
  return out;
}

/// Counts over the levels actually observed in each variable.
struct ContingencyTable {
  Eigen::MatrixXd counts;
  double n = 0;
  std::vector<std::int32_t> row_levels;
  std::vector<std::int32_t> col_levels;

  std::size_t rows() const { return static_cast<std::size_t>(counts.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(counts.cols()); }
};

inline ContingencyTable contingency(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
  require(a.size() == b.size(), ErrorCode::invalid_input, "contingency inputs differ in length");
  require(!a.empty(), ErrorCode::invalid_input, "contingency of empty columns");
  std::map<std::int32_t, Eigen::Index> ra, cb;
  for (auto v : a) ra.emplace(v, 0);
  for (auto v : b) cb.emplace(v, 0);
  ContingencyTable t;
  Eigen::Index k = 0;
  for (auto& [level, idx] : ra) {
    idx = k++;
    t.row_levels.push_back(level);
  }
  k = 0;
  for (auto& [level, idx] : cb) {
    idx = k++;
    t.col_levels.push_back(level);
  }
  t.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ra.size()), static_cast<Eigen::Index>(cb.size()));
  for (std::size_t i = 0; i < a.size(); ++i) t.counts(ra[a[i]], cb[b[i]]) += 1.0;
  t.n = static_cast<double>(a.size());
  return t;
}

inline ContingencyTable contingency(const Eigen::MatrixXd& counts) {
  require(counts.rows() >= 1 && counts.cols() >= 1, ErrorCode::invalid_input, "empty contingency table");
  require((counts.array() >= 0).all(), ErrorCode::invalid_input, "negative count");
  ContingencyTable t;
  t.counts = counts;
  t.n = counts.sum();
  for (Eigen::Index i = 0; i < counts.rows(); ++i) t.row_levels.push_back(static_cast<std::int32_t>(i));
  for (Eigen::Index j = 0; j < counts.cols(); ++j) t.col_levels.push_back(static_cast<std::int32_t>(j));
  return t;
}

struct ChiSquared {
  double chi2 = 0;
  std::size_t df = 0;
  bool zero_variation = false;
};

/// Pearson statistic with expected counts from the margins; cells with zero
/// expectation contribute nothing.
inline ChiSquared chi_squared(const ContingencyTable& t) {
  require(t.n >= 1, ErrorCode::invalid_input, "contingency table has no observations");
  const std::size_t r = t.rows(), c = t.cols();
  ChiSquared out;
  if (r <= 1 || c <= 1) {
    out.zero_variation = true;
    return out;
  }
  const Eigen::VectorXd row = t.counts.rowwise().sum();
  const Eigen::RowVectorXd col = t.counts.colwise().sum();
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
      const double e = row(i) * col(j) / t.n;
      if (e <= 0) continue;
      const double d = t.counts(i, j) - e;
      out.chi2 += d * d / e;
    }
  }
  out.df = (r - 1) * (c - 1);
  return out;
}

/// How the degrees of freedom in the effect size are counted: `product` uses
/// (r-1)(c-1), `min` uses min(r-1, c-1) (Cramér's V).
enum class EffectSizeDf { product, min };

inline EffectSizeDf parse_effect_size_df(const std::string& s) {
  if (s == "product") return EffectSizeDf::product;
  if (s == "min") return EffectSizeDf::min;
  fail(ErrorCode::invalid_input, "effect_size_df must be 'product' or 'min', got '" + s + "'");
}

inline std::string to_string(EffectSizeDf m) { return m == EffectSizeDf::product ? "product" : "min"; }

inline std::size_t effect_df(const ContingencyTable& t, EffectSizeDf mode) {
  if (t.rows() <= 1 || t.cols() <= 1) return 0;
  return mode == EffectSizeDf::product ? (t.rows() - 1) * (t.cols() - 1) : std::min(t.rows(), t.cols()) - 1;
}

/// sqrt(chi2 / (n df)); nullopt when df is zero.
inline std::optional<double> effect_size(double chi2, double n, std::size_t df) {
  require(n >= 1, ErrorCode::invalid_input, "effect size needs n >= 1");
  if (df == 0) return std::nullopt;
  return std::sqrt(chi2 / (n * static_cast<double>(df)));
}

inline std::optional<double> effect_size(const ContingencyTable& t, EffectSizeDf mode) {
  const auto cs = chi_squared(t);
  return effect_size(cs.chi2, t.n, effect_df(t, mode));
}

/// Discrete codes for every column (continuous columns binned).
struct Discretized {
  std::vector<std::vector<std::int32_t>> codes;
  std::vector<bool> zero_variation;
};

inline Discretized discretize(const ColumnTable& table, std::size_t n_bins) {
  Discretized d;
  for (std::size_t j = 0; j < table.n_cols(); ++j) {
    if (table.spec(j).discrete()) {
      const auto& codes = table.column(j).codes;
      d.codes.push_back(codes);
      const bool constant = codes.empty() || std::all_of(codes.begin(), codes.end(), [&](auto c) { return c == codes[0]; });
      d.zero_variation.push_back(constant);
    } else {
      auto b = bin_continuous(table.column(j).values, n_bins);
      d.codes.push_back(std::move(b.codes));
      d.zero_variation.push_back(b.zero_variation);
    }
  }
  return d;
}

struct AssociationMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd values;                                    // masked cells hold 0
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> defined;
  std::vector<bool> zero_variation;                          // per column, reason for masking

  std::size_t size() const { return names.size(); }
};

inline AssociationMatrix association_matrix(const ColumnTable& table, std::size_t n_bins = 10,
                                            EffectSizeDf mode = EffectSizeDf::product) {
  const std::size_t p = table.n_cols();
  require(p >= 2, ErrorCode::invalid_input, "association matrix needs at least 2 columns");
  require(table.n_rows() >= 1, ErrorCode::invalid_input, "association matrix of an empty table");
  const auto d = discretize(table, n_bins);
  AssociationMatrix a;
  for (std::size_t j = 0; j < p; ++j) a.names.push_back(table.spec(j).name);
  const auto P = static_cast<Eigen::Index>(p);
  a.values = Eigen::MatrixXd::Identity(P, P);
  a.defined.setConstant(P, P, false);
  a.zero_variation = d.zero_variation;
  for (Eigen::Index i = 0; i < P; ++i) a.defined(i, i) = true;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const auto es = effect_size(contingency(d.codes[i], d.codes[j]), mode);
      const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
      if (es) {
        a.values(I, J) = a.values(J, I) = *es;
        a.defined(I, J) = a.defined(J, I) = true;
      }
    }
  }
  return a;
}

struct DifferenceMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // masked cells hold 0
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> defined;
};

inline DifferenceMatrix difference_matrix(const AssociationMatrix& real, const AssociationMatrix& synth) {
  require(real.names == synth.names, ErrorCode::schema_mismatch, "association matrices cover different columns");
  DifferenceMatrix d;
  d.names = real.names;
  d.defined = real.defined.array() && synth.defined.array();
  d.values = (real.values - synth.values).cwiseProduct(d.defined.cast<double>());
  return d;
}

/// |det| via LU with partial pivoting.
inline double det_difference(const Eigen::MatrixXd& diff) {
  require(diff.rows() == diff.cols(), ErrorCode::invalid_input, "determinant of a non-square matrix");
  if (diff.size() == 0) return 1.0;
  return std::abs(diff.partialPivLu().determinant());
}

}  // namespace synthaudit::dependence
