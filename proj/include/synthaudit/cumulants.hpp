#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "synthaudit/error.hpp"

namespace synthaudit::cumulants {

inline constexpr std::size_t kMaxOrder = 4;

/// Up to four variable indices; only the first `order` entries are used.
using MultiIndex = std::array<std::uint32_t, kMaxOrder>;

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline std::uint64_t ipow(std::uint64_t base, std::size_t e) {
  std::uint64_t r = 1;
  while (e--) r *= base;
  return r;
}

/// Enumeration of the sorted multi-indices (multisets) of a given order over p
/// variables. Position of a multiset is its colex rank: with c_t = i_t + t for
/// the sorted indices, rank = sum_t C(c_t, t + 1).
class MultisetIndex {
 public:
  MultisetIndex(std::size_t p, std::size_t order) : p_(p), order_(order) {
    require(order >= 1 && order <= kMaxOrder, ErrorCode::invalid_input, "order must lie in 1..4");
    require(p >= 1, ErrorCode::invalid_input, "need at least one variable");
    const auto count = binomial(p + order - 1, order);
    entries_.resize(count);
    multiplicity_.resize(count);
    MultiIndex idx{};
    enumerate(idx, 0, 0);
  }

  std::size_t p() const { return p_; }
  std::size_t order() const { return order_; }
  std::size_t size() const { return entries_.size(); }
  std::uint64_t expanded_count() const { return ipow(p_, order_); }
  const MultiIndex& at(std::size_t rank) const { return entries_[rank]; }
  /// Number of distinct permutations of the multiset at `rank`.
  std::uint64_t multiplicity(std::size_t rank) const { return multiplicity_[rank]; }

  /// Rank of any (not necessarily sorted) index tuple.
  std::size_t rank_of(std::span<const std::uint32_t> index) const {
    require(index.size() == order_, ErrorCode::invalid_input, "multi-index has the wrong order");
    MultiIndex s{};
    for (std::size_t t = 0; t < order_; ++t) {
      require(index[t] < p_, ErrorCode::invalid_input, "variable index out of range");
      s[t] = index[t];
    }
    std::sort(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(order_));
    return sorted_rank(s);
  }

  std::size_t sorted_rank(const MultiIndex& s) const {
    std::uint64_t r = 0;
    for (std::size_t t = 0; t < order_; ++t) r += binomial(s[t] + t, t + 1);
    return static_cast<std::size_t>(r);
  }

 private:
  void enumerate(MultiIndex& idx, std::size_t depth, std::uint32_t start) {
    if (depth == order_) {
      const auto r = sorted_rank(idx);
      entries_[r] = idx;
      multiplicity_[r] = permutations(idx);
      return;
    }
    for (std::uint32_t v = start; v < p_; ++v) {
      idx[depth] = v;
      enumerate(idx, depth + 1, v);
    }
  }

  std::uint64_t permutations(const MultiIndex& s) const {
    std::uint64_t r = 1;
    for (std::size_t t = 2; t <= order_; ++t) r *= t;
    std::size_t run = 1;
    for (std::size_t t = 1; t <= order_; ++t) {
      if (t < order_ && s[t] == s[t - 1]) {
        ++run;
      } else {
        for (std::size_t f = 2; f <= run; ++f) r /= f;
        run = 1;
      }
    }
    return r;
  }

  std::size_t p_;
  std::size_t order_;
  std::vector<MultiIndex> entries_;
  std::vector<std::uint64_t> multiplicity_;
};

/// Sample means plus biased (1/n) central product moments of orders 2-4, one
/// value per multiset.
class MomentCache {
 public:
  /// `threads` = 0 picks the hardware concurrency. Every stored moment is
  /// computed by one thread in a fixed order, so results do not depend on
  /// the thread count.
  explicit MomentCache(const Eigen::MatrixXd& x, std::size_t threads = 1) : n_(static_cast<std::size_t>(x.rows())) {
    require(x.rows() >= 5, ErrorCode::insufficient_data, "moment cache needs at least 5 rows");
    require(x.cols() >= 1, ErrorCode::invalid_input, "moment cache needs at least one column");
    require(x.allFinite(), ErrorCode::invalid_input, "non-finite value in data");
    const std::size_t p = static_cast<std::size_t>(x.cols());
    means_ = x.colwise().mean().transpose();
    const Eigen::MatrixXd xc = x.rowwise() - means_.transpose();
    for (std::size_t k = 2; k <= kMaxOrder; ++k) {
      index_[k] = std::make_shared<const MultisetIndex>(p, k);
      moments_[k].assign(index_[k]->size(), 0.0);
    }
    const double inv_n = 1.0 / static_cast<double>(n_);

    auto work = [&](std::size_t i) {
      const Eigen::Index I = static_cast<Eigen::Index>(i);
      for (std::size_t j = i; j < p; ++j) {
        const Eigen::VectorXd pij = xc.col(I).cwiseProduct(xc.col(static_cast<Eigen::Index>(j)));
        moments_[2][index_[2]->sorted_rank({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)})] =
            pij.sum() * inv_n;
        for (std::size_t k = j; k < p; ++k) {
          const Eigen::VectorXd pijk = pij.cwiseProduct(xc.col(static_cast<Eigen::Index>(k)));
          const MultiIndex i3{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                              static_cast<std::uint32_t>(k)};
          moments_[3][index_[3]->sorted_rank(i3)] = pijk.sum() * inv_n;
          for (std::size_t l = k; l < p; ++l) {
            const MultiIndex i4{i3[0], i3[1], i3[2], static_cast<std::uint32_t>(l)};
            moments_[4][index_[4]->sorted_rank(i4)] = pijk.dot(xc.col(static_cast<Eigen::Index>(l))) * inv_n;
          }
        }
      }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, p);
    if (threads <= 1) {
      for (std::size_t i = 0; i < p; ++i) work(i);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
          for (std::size_t i = t; i < p; i += threads) work(i);
        });
      for (auto& th : pool) th.join();
    }
  }

  std::size_t n() const { return n_; }
  std::size_t p() const { return static_cast<std::size_t>(means_.size()); }
  const Eigen::VectorXd& means() const { return means_; }
  const MultisetIndex& index(std::size_t order) const { return *index_.at(order); }
  std::shared_ptr<const MultisetIndex> index_ptr(std::size_t order) const { return index_.at(order); }

  /// Central product moment for any index tuple of length 2..4.
  double moment(std::span<const std::uint32_t> idx) const {
    require(idx.size() >= 2 && idx.size() <= kMaxOrder, ErrorCode::invalid_input, "moment order must lie in 2..4");
    return moments_[idx.size()][index_[idx.size()]->rank_of(idx)];
  }
  double moment(std::initializer_list<std::uint32_t> idx) const {
    return moment(std::span<const std::uint32_t>(idx.begin(), idx.size()));
  }
  const std::vector<double>& moments(std::size_t order) const { return moments_.at(order); }

 private:
  std::size_t n_;
  Eigen::VectorXd means_;
  std::array<std::shared_ptr<const MultisetIndex>, kMaxOrder + 1> index_{};
  std::array<std::vector<double>, kMaxOrder + 1> moments_{};
};

/// Joint cumulant of the variables in `index` (length 1..4) from the
/// partition expansion over centred variables. Blocks of size one vanish after
/// centring, leaving: order 2 and 3 the central moment itself; order 4 the
/// central moment minus the three pair-pair products. Order 1 is the mean.
inline double joint_cumulant(const MomentCache& cache, std::span<const std::uint32_t> index) {
  require(!index.empty() && index.size() <= kMaxOrder, ErrorCode::invalid_input, "cumulant order must lie in 1..4");
  for (auto i : index) require(i < cache.p(), ErrorCode::invalid_input, "variable index out of range");
  MultiIndex s{};
  std::copy(index.begin(), index.end(), s.begin());
  std::sort(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(index.size()));
  switch (index.size()) {
    case 1: return cache.means()(index[0]);
    case 2:
    case 3: return cache.moment(index);
    default: {
      const auto i = s[0], j = s[1], k = s[2], l = s[3];
      return cache.moment(index) - cache.moment({i, j}) * cache.moment({k, l}) -
             cache.moment({i, k}) * cache.moment({j, l}) - cache.moment({i, l}) * cache.moment({j, k});
    }
  }
}

inline double joint_cumulant(const MomentCache& cache, std::initializer_list<std::uint32_t> index) {
  return joint_cumulant(cache, std::span<const std::uint32_t>(index.begin(), index.size()));
}

/// Symmetric order-k cumulant tensor stored once per multiset; lookups accept
/// any permutation and the expanded view has p^order entries.
class CumulantTensor {
 public:
  CumulantTensor(std::shared_ptr<const MultisetIndex> index, std::vector<double> values)
      : index_(std::move(index)), values_(std::move(values)) {
    require(index_ && values_.size() == index_->size(), ErrorCode::invalid_input, "tensor values do not match index");
  }

  std::size_t order() const { return index_->order(); }
  std::size_t p() const { return index_->p(); }
  std::uint64_t expanded_count() const { return index_->expanded_count(); }
  std::size_t unique_count() const { return values_.size(); }
  const MultisetIndex& index() const { return *index_; }
  const std::vector<double>& values() const { return values_; }
  double value(std::size_t rank) const { return values_[rank]; }

  double at(std::span<const std::uint32_t> idx) const { return values_[index_->rank_of(idx)]; }
  double at(std::initializer_list<std::uint32_t> idx) const {
    return at(std::span<const std::uint32_t>(idx.begin(), idx.size()));
  }

  /// Mean and population variance over the p^order expanded entries.
  std::pair<double, double> expanded_mean_variance() const {
    const double total = static_cast<double>(expanded_count());
    double mean = 0;
    for (std::size_t r = 0; r < values_.size(); ++r)
      mean += static_cast<double>(index_->multiplicity(r)) * values_[r];
    mean /= total;
    double var = 0;
    for (std::size_t r = 0; r < values_.size(); ++r) {
      const double d = values_[r] - mean;
      var += static_cast<double>(index_->multiplicity(r)) * d * d;
    }
    return {mean, var / total};
  }

 private:
  std::shared_ptr<const MultisetIndex> index_;
  std::vector<double> values_;
};

inline CumulantTensor cumulant_tensor(const MomentCache& cache, std::size_t order) {
  require(order >= 2 && order <= kMaxOrder, ErrorCode::invalid_input, "tensor order must lie in 2..4");
  auto idx = cache.index_ptr(order);
  std::vector<double> values(idx->size());
  for (std::size_t r = 0; r < idx->size(); ++r)
    values[r] = joint_cumulant(cache, std::span<const std::uint32_t>(idx->at(r).data(), order));
  return CumulantTensor(std::move(idx), std::move(values));
}

/// Two-sided empirical-rule screen: an entry is positive (deemed nonzero) when
/// it falls outside mean +/- 2 sd of all expanded entries of its order.
struct SignificanceMask {
  std::size_t order = 0;
  std::size_t p = 0;
  double mean = 0;
  double sd = 0;
  double threshold_low = 0;
  double threshold_high = 0;
  bool degenerate = false;
  std::vector<bool> positive;  // per multiset rank
  std::uint64_t n_positive = 0;  // expanded counts
  std::uint64_t n_negative = 0;
};

inline SignificanceMask empirical_rule_mask(const CumulantTensor& t, double n_sd = 2.0) {
  require(t.unique_count() > 0, ErrorCode::invalid_input, "empty tensor");
  SignificanceMask m;
  m.order = t.order();
  m.p = t.p();
  const auto [mean, var] = t.expanded_mean_variance();
  m.mean = mean;
  m.sd = std::sqrt(var);
  m.threshold_low = mean - n_sd * m.sd;
  m.threshold_high = mean + n_sd * m.sd;
  double scale = 0;
  for (double v : t.values()) scale = std::max(scale, std::abs(v));
  m.degenerate = !(m.sd > 1e-12 * scale);
  m.positive.assign(t.unique_count(), false);
  for (std::size_t r = 0; r < t.unique_count(); ++r) {
    const double v = t.value(r);
    const bool pos = !m.degenerate && (v < m.threshold_low || v > m.threshold_high);
    m.positive[r] = pos;
    (pos ? m.n_positive : m.n_negative) += t.index().multiplicity(r);
  }
  return m;
}

struct RateSummary {
  std::optional<double> tpr;  // nullopt when the real mask has no positives
  std::optional<double> tnr;  // nullopt when the real mask has no negatives
  std::uint64_t tp = 0, fn = 0, tn = 0, fp = 0;
};

/// Agreement of synthetic significance with the real mask, counted over
/// expanded entries; positives are those of the real mask.
inline RateSummary tpr_tnr(const SignificanceMask& real, const SignificanceMask& synth, const MultisetIndex& index) {
  require(real.order == synth.order && real.p == synth.p && real.positive.size() == synth.positive.size(),
          ErrorCode::schema_mismatch, "masks differ in order or dimension");
  require(index.size() == real.positive.size(), ErrorCode::invalid_input, "index does not match masks");
  RateSummary s;
  for (std::size_t r = 0; r < real.positive.size(); ++r) {
    const auto m = index.multiplicity(r);
    if (real.positive[r]) (synth.positive[r] ? s.tp : s.fn) += m;
    else (synth.positive[r] ? s.fp : s.tn) += m;
  }
  if (s.tp + s.fn > 0) s.tpr = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
  if (s.tn + s.fp > 0) s.tnr = static_cast<double>(s.tn) / static_cast<double>(s.tn + s.fp);
  return s;
}

/// Mean squared difference over expanded entries divided by the variance of
/// the real tensor's expanded entries; nullopt when that variance is zero.
inline std::optional<double> standardized_error(const CumulantTensor& real, const CumulantTensor& synth) {
  require(real.order() == synth.order() && real.p() == synth.p(), ErrorCode::schema_mismatch,
          "tensors differ in order or dimension");
  const double total = static_cast<double>(real.expanded_count());
  double mse = 0;
  for (std::size_t r = 0; r < real.unique_count(); ++r) {
    const double d = synth.value(r) - real.value(r);
    mse += static_cast<double>(real.index().multiplicity(r)) * d * d;
  }
  mse /= total;
  const double var = real.expanded_mean_variance().second;
  if (!(var > 0)) return std::nullopt;
  return mse / var;
}

struct ScreeRow {
  std::size_t rank = 0;  // 1-based
  MultiIndex index{};    // expanded (unsorted) index
  double reference = 0;
  double mean = 0;
  double min = 0;
  double max = 0;
};

/// The k expanded entries with largest |reference| (ties by lexicographic
/// index), each with the mean/min/max over `trials` at the same index.
inline std::vector<ScreeRow> scree_data(const std::vector<CumulantTensor>& trials, const CumulantTensor& reference,
                                        std::size_t k = 100) {
  require(k >= 1, ErrorCode::invalid_input, "scree size must be >= 1");
  require(!trials.empty(), ErrorCode::invalid_input, "scree data needs at least one trial tensor");
  for (const auto& t : trials)
    require(t.order() == reference.order() && t.p() == reference.p(), ErrorCode::schema_mismatch,
            "trial tensor differs in order or dimension");
  const auto& idx = reference.index();
  const std::size_t order = reference.order();
  k = static_cast<std::size_t>(std::min<std::uint64_t>(k, reference.expanded_count()));

  std::vector<std::size_t> ranks(reference.unique_count());
  for (std::size_t r = 0; r < ranks.size(); ++r) ranks[r] = r;
  std::stable_sort(ranks.begin(), ranks.end(), [&](std::size_t a, std::size_t b) {
    const double va = std::abs(reference.value(a)), vb = std::abs(reference.value(b));
    if (va != vb) return va > vb;
    return idx.at(a) < idx.at(b);
  });
  // Take multisets until k expanded entries are covered, plus any tied with
  // the last one taken, then order their permutations.
  std::vector<std::pair<std::size_t, MultiIndex>> candidates;
  std::uint64_t covered = 0;
  double boundary = 0;
  for (auto r : ranks) {
    const double v = std::abs(reference.value(r));
    if (covered >= k && v != boundary) break;
    boundary = v;
    covered += idx.multiplicity(r);
    MultiIndex perm = idx.at(r);
    do {
      candidates.emplace_back(r, perm);
    } while (std::next_permutation(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(order)));
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](const auto& a, const auto& b) {
    const double va = std::abs(reference.value(a.first)), vb = std::abs(reference.value(b.first));
    if (va != vb) return va > vb;
    return a.second < b.second;
  });
  std::vector<ScreeRow> rows;
  for (std::size_t i = 0; i < k; ++i) {
    const auto r = candidates[i].first;
    ScreeRow row;
    row.rank = i + 1;
    row.index = candidates[i].second;
    row.reference = reference.value(r);
    row.min = std::numeric_limits<double>::infinity();
    row.max = -std::numeric_limits<double>::infinity();
    for (const auto& t : trials) {
      const double v = t.value(r);
      row.mean += v;
      row.min = std::min(row.min, v);
      row.max = std::max(row.max, v);
    }
    row.mean /= static_cast<double>(trials.size());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace synthaudit::cumulants
