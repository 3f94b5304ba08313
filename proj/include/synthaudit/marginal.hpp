#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthaudit/error.hpp"
#include "synthaudit/table.hpp"

namespace synthaudit::marginal {

struct KsResult {
  std::string column;
  double statistic = 0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

/// Two-sample Kolmogorov-Smirnov statistic, sup |F_a - F_b|, evaluated at
/// every jump point of the merged sorted samples so ties are exact.
inline double ks_statistic(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), ErrorCode::invalid_input, "KS statistic needs two nonempty samples");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < sa.size() || j < sb.size()) {
    double x;
    if (j == sb.size() || (i < sa.size() && sa[i] <= sb[j])) x = sa[i];
    else x = sb[j];
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Largest KS statistic over continuous columns present in both tables, or
/// nullopt when none exist.
inline std::optional<double> worst_case_ks(const ColumnTable& real, const ColumnTable& synth,
                                           std::vector<KsResult>* per_column = nullptr) {
  std::optional<double> worst;
  for (std::size_t j = 0; j < real.n_cols(); ++j) {
    if (real.spec(j).kind != ColumnKind::continuous) continue;
    const auto k = synth.schema().index_of(real.spec(j).name);
    if (!k || synth.spec(*k).kind != ColumnKind::continuous) continue;
    const auto& a = real.column(j).values;
    const auto& b = synth.column(*k).values;
    const double s = ks_statistic(a, b);
    if (per_column) per_column->push_back({real.spec(j).name, s, a.size(), b.size()});
    worst = std::max(worst.value_or(0.0), s);
  }
  return worst;
}

inline double best_trial_ks(std::span<const double> per_trial_worst) {
  require(!per_trial_worst.empty(), ErrorCode::invalid_input, "no trials to summarise");
  return *std::min_element(per_trial_worst.begin(), per_trial_worst.end());
}

struct ProportionComparison {
  std::vector<std::string> levels;
  std::vector<double> real_freq;
  std::vector<double> synth_freq;
  double tvd = 0;
};

/// Per-level relative frequencies and total variation distance between two
/// discrete columns sharing a vocabulary.
inline ProportionComparison proportion_comparison(const ColumnSpec& real_spec, std::span<const std::int32_t> real_codes,
                                                  const ColumnSpec& synth_spec,
                                                  std::span<const std::int32_t> synth_codes) {
  require(real_spec.discrete() && synth_spec.discrete(), ErrorCode::invalid_input, "proportions need discrete columns");
  require(real_spec.levels == synth_spec.levels, ErrorCode::schema_mismatch,
          "column '" + real_spec.name + "' has a different vocabulary in the two samples");
  require(!real_codes.empty() && !synth_codes.empty(), ErrorCode::invalid_input, "empty column");
  const std::size_t k = real_spec.levels.size();
  ProportionComparison out;
  out.levels = real_spec.levels;
  out.real_freq.assign(k, 0.0);
  out.synth_freq.assign(k, 0.0);
  for (auto c : real_codes) out.real_freq[c] += 1.0;
  for (auto c : synth_codes) out.synth_freq[c] += 1.0;
  for (std::size_t l = 0; l < k; ++l) {
    out.real_freq[l] /= static_cast<double>(real_codes.size());
    out.synth_freq[l] /= static_cast<double>(synth_codes.size());
    out.tvd += std::abs(out.real_freq[l] - out.synth_freq[l]);
  }
  out.tvd *= 0.5;
  return out;
}

inline constexpr double kSummaryQuantiles[] = {0.0, 0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99, 1.0};

struct MarginalSummary {
  std::string column;
  std::vector<double> quantiles;  // at kSummaryQuantiles
  std::vector<double> bin_edges;  // 51 edges
  std::vector<std::size_t> counts;
  double mean = 0;
  double sd = 0;  // n-1 denominator; 0 for a single value
};

/// Nearest-rank quantile: the value at 1-based rank ceil(q n), rank 1 for q = 0.
inline double nearest_rank(std::span<const double> sorted, double q) {
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-12));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

inline MarginalSummary marginal_summary(std::string column, std::span<const double> col, std::size_t n_bins = 50) {
  require(!col.empty(), ErrorCode::invalid_input, "summary of an empty column");
  MarginalSummary s;
  s.column = std::move(column);
  std::vector<double> sorted(col.begin(), col.end());
  std::sort(sorted.begin(), sorted.end());
  for (double q : kSummaryQuantiles) s.quantiles.push_back(nearest_rank(sorted, q));

  const double n = static_cast<double>(col.size());
  for (double v : col) s.mean += v;
  s.mean /= n;
  if (col.size() > 1) {
    double ss = 0;
    for (double v : col) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (n - 1));
  }

  const double lo = sorted.front(), hi = sorted.back();
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t b = 0; b <= n_bins; ++b) s.bin_edges.push_back(b == n_bins ? hi : lo + width * static_cast<double>(b));
  s.counts.assign(n_bins, 0);
  for (double v : col) {
    std::size_t b = width > 0 ? static_cast<std::size_t>((v - lo) / width) : 0;
    ++s.counts[std::min(b, n_bins - 1)];
  }
  return s;
}

}  // namespace synthaudit::marginal
