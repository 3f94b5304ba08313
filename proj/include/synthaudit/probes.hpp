#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "synthaudit/error.hpp"
#include "synthaudit/rng.hpp"

namespace synthaudit::probes {

struct LogisticFit {
  Eigen::VectorXd coefficients;  // intercept first
  Eigen::MatrixXd covariance;
  double log_likelihood = 0;
  bool converged = false;
  std::size_t n_iter = 0;
};

namespace detail {

inline double log1p_exp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logistic_loglik(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = a * beta;
  double ll = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - log1p_exp(eta(i));
  return ll;
}

}  // namespace detail

/// Maximum-likelihood logistic regression by iteratively reweighted least
/// squares with step halving. The covariance is the inverse observed Fisher
/// information at the returned coefficients.
inline LogisticFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tol = 1e-8,
                                std::size_t max_iter = 100) {
  const Eigen::Index n = x.rows();
  require(y.size() == n && n >= 1, ErrorCode::invalid_input, "design and response differ in length");
  for (Eigen::Index i = 0; i < n; ++i)
    require(y(i) == 0.0 || y(i) == 1.0, ErrorCode::invalid_input, "response must be 0/1");
  require(y.sum() > 0 && y.sum() < static_cast<double>(n), ErrorCode::invalid_input, "response needs both classes");

  Eigen::MatrixXd a(n, x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  require(qr.rank() == a.cols(), ErrorCode::singular, "design matrix is rank deficient");

  LogisticFit fit;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(a.cols());
  double ll = detail::logistic_loglik(a, y, beta);
  Eigen::MatrixXd hessian;
  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    fit.n_iter = iter;
    const Eigen::VectorXd eta = a * beta;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = detail::sigmoid(eta(i));
      w(i) = mu(i) * (1.0 - mu(i));
    }
    const Eigen::VectorXd grad = a.transpose() * (y - mu);
    hessian = a.transpose() * w.asDiagonal() * a;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (!(ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-14)) {
      // The design has full rank, so a vanishing information matrix means the
      // fitted probabilities have saturated while the coefficients run away.
      fail(iter > 1 ? ErrorCode::separation : ErrorCode::singular,
           iter > 1 ? "fitted probabilities saturate (complete or quasi-complete separation)"
                    : "singular information matrix");
    }
    Eigen::VectorXd step = ldlt.solve(grad);
    const double step_scale = 1.0 + beta.norm();
    if (step.norm() < tol * step_scale ||
        (grad.lpNorm<Eigen::Infinity>() < tol && step.norm() < std::sqrt(tol) * step_scale)) {
      fit.converged = true;
      break;
    }
    double next_ll = detail::logistic_loglik(a, y, beta + step);
    // Below the rounding level of ll the comparison carries no information,
    // so the full Newton step is taken.
    const bool resolvable = 0.5 * grad.dot(step) > 1e-10 * (std::abs(ll) + 1.0);
    for (int halve = 0; resolvable && halve < 50 && !(next_ll >= ll); ++halve) {
      step *= 0.5;
      next_ll = detail::logistic_loglik(a, y, beta + step);
    }
    if (!resolvable) next_ll = std::max(next_ll, ll);
    if (!(next_ll >= ll)) break;  // no ascent direction left
    const double gain = next_ll - ll;
    beta += step;
    ll = next_ll;
    if (beta.norm() > 1e3 && gain >= 0)
      fail(ErrorCode::separation, "coefficients diverge (complete or quasi-complete separation)");
  }
  fit.coefficients = beta;
  fit.log_likelihood = ll;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
  require(ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-14, ErrorCode::singular,
          "information matrix is singular at the estimate");
  fit.covariance = ldlt.solve(Eigen::MatrixXd::Identity(a.cols(), a.cols()));
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose());
  return fit;
}

struct Interval {
  double low = 0;
  double high = 0;
  double length() const { return high - low; }
};

inline double normal_quantile(double p) { return boost::math::quantile(boost::math::normal_distribution<>(), p); }

/// beta_j +/- z_{(1+level)/2} sqrt(cov_jj).
inline std::vector<Interval> wald_intervals(const LogisticFit& fit, double level = 0.95) {
  require(fit.converged, ErrorCode::invalid_input, "wald intervals need a converged fit");
  require(level > 0 && level < 1, ErrorCode::invalid_input, "level must lie in (0, 1)");
  const double z = normal_quantile(0.5 * (1.0 + level));
  std::vector<Interval> out;
  for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
    const double half = z * std::sqrt(std::max(0.0, fit.covariance(j, j)));
    out.push_back({fit.coefficients(j) - half, fit.coefficients(j) + half});
  }
  return out;
}

/// 100 |a n b| / |a u b|. Two identical degenerate intervals overlap 100%.
inline double interval_overlap_pct(const Interval& a, const Interval& b) {
  require(a.low <= a.high && b.low <= b.high, ErrorCode::invalid_input, "interval with low > high");
  const double inter = std::max(0.0, std::min(a.high, b.high) - std::max(a.low, b.low));
  const double uni = a.length() + b.length() - inter;
  if (uni <= 0) return (a.low == b.low && a.high == b.high) ? 100.0 : 0.0;
  return 100.0 * inter / uni;
}

struct PcaModel {
  std::vector<std::size_t> kept_columns;     // input columns with nonzero variance
  std::vector<std::size_t> dropped_columns;  // constant input columns
  Eigen::VectorXd means;                     // over kept columns
  Eigen::VectorXd sds;
  Eigen::MatrixXd loadings;                  // kept x components
  Eigen::VectorXd explained_variance;        // eigenvalues of the correlation matrix

  /// Standardises with this model's means and sds, then projects.
  Eigen::MatrixXd project(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd z(x.rows(), static_cast<Eigen::Index>(kept_columns.size()));
    for (std::size_t k = 0; k < kept_columns.size(); ++k) {
      const auto K = static_cast<Eigen::Index>(k);
      z.col(K) = (x.col(static_cast<Eigen::Index>(kept_columns[k])).array() - means(K)) / sds(K);
    }
    return z * loadings;
  }
};

struct PcaResult {
  PcaModel model;
  Eigen::MatrixXd scores;
};

/// PCA on the correlation matrix. Loadings are the leading eigenvectors, each
/// signed so its largest-magnitude entry is positive.
inline PcaResult pca_project(const Eigen::MatrixXd& x, std::size_t n_components = 2) {
  require(x.rows() >= 3, ErrorCode::invalid_input, "PCA needs at least 3 rows");
  require(n_components >= 1, ErrorCode::invalid_input, "need at least one component");
  PcaModel m;
  const double n = static_cast<double>(x.rows());
  std::vector<double> mean_v, sd_v;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    const double sd = std::sqrt((x.col(j).array() - mean).square().sum() / (n - 1));
    const double scale = std::max(1.0, x.col(j).cwiseAbs().maxCoeff());
    if (sd <= 1e-12 * scale) {
      m.dropped_columns.push_back(static_cast<std::size_t>(j));
      continue;
    }
    m.kept_columns.push_back(static_cast<std::size_t>(j));
    mean_v.push_back(mean);
    sd_v.push_back(sd);
  }
  require(m.kept_columns.size() >= 2 && m.kept_columns.size() >= n_components, ErrorCode::invalid_input,
          "PCA needs at least 2 non-constant columns");
  m.means = Eigen::Map<Eigen::VectorXd>(mean_v.data(), static_cast<Eigen::Index>(mean_v.size()));
  m.sds = Eigen::Map<Eigen::VectorXd>(sd_v.data(), static_cast<Eigen::Index>(sd_v.size()));
  m.loadings = Eigen::MatrixXd::Identity(m.means.size(), m.means.size());
  const Eigen::MatrixXd z = m.project(x);
  const Eigen::MatrixXd corr = (z.transpose() * z) / (n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
  const auto p = corr.rows();
  const auto k = static_cast<Eigen::Index>(n_components);
  m.loadings.resize(p, k);
  m.explained_variance.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd v = es.eigenvectors().col(p - 1 - c);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    m.loadings.col(c) = v;
    m.explained_variance(c) = std::max(0.0, es.eigenvalues()(p - 1 - c));
  }
  PcaResult r;
  r.scores = z * m.loadings;
  r.model = std::move(m);
  return r;
}

/// Confidence ellipse {x : (x - c)' S^-1 (x - c) <= scale}.
struct Ellipse2D {
  Eigen::Vector2d center;
  Eigen::Matrix2d shape;
  double scale = 0;

  bool contains(const Eigen::Vector2d& pt) const {
    const Eigen::Vector2d d = pt - center;
    return d.dot(shape.ldlt().solve(d)) <= scale;
  }
};

/// Chi-square(2) quantile at `level`.
inline double chi2_2_quantile(double level) { return -2.0 * std::log1p(-level); }

inline Ellipse2D fit_ellipse(const Eigen::MatrixXd& scores, double level = 0.95) {
  require(scores.cols() == 2, ErrorCode::invalid_input, "ellipse fit needs two score columns");
  require(scores.rows() >= 3, ErrorCode::invalid_input, "ellipse fit needs at least 3 points");
  require(level > 0 && level < 1, ErrorCode::invalid_input, "level must lie in (0, 1)");
  Ellipse2D e;
  e.center = scores.colwise().mean().transpose();
  const Eigen::MatrixXd c = scores.rowwise() - e.center.transpose();
  e.shape = (c.transpose() * c) / static_cast<double>(scores.rows() - 1);
  const double scale = std::max(1.0, e.shape.diagonal().maxCoeff());
  require(e.shape.determinant() > 1e-12 * scale * scale && e.shape(0, 0) > 0, ErrorCode::degenerate,
          "score covariance is degenerate");
  e.scale = chi2_2_quantile(level);
  return e;
}

/// Jaccard overlap of two ellipses, |A n B| / |A u B|, by Monte Carlo over the
/// joint bounding box. Samples are drawn in fixed-size blocks, each from its
/// own seeded stream.
inline double ellipse_overlap(const Ellipse2D& a, const Ellipse2D& b, std::size_t mc_samples = 100000,
                              std::uint64_t seed = 0) {
  require(mc_samples >= 1, ErrorCode::invalid_input, "need at least one Monte Carlo sample");
  auto box = [](const Ellipse2D& e) {
    const Eigen::Vector2d half(std::sqrt(e.scale * e.shape(0, 0)), std::sqrt(e.scale * e.shape(1, 1)));
    return std::pair<Eigen::Vector2d, Eigen::Vector2d>{e.center - half, e.center + half};
  };
  const auto [alo, ahi] = box(a);
  const auto [blo, bhi] = box(b);
  const Eigen::Vector2d lo = alo.cwiseMin(blo), hi = ahi.cwiseMax(bhi);
  const Eigen::Matrix2d ia = a.shape.inverse(), ib = b.shape.inverse();
  constexpr std::size_t kBlock = 4096;
  std::size_t both = 0, either = 0;
  for (std::size_t start = 0, block = 0; start < mc_samples; start += kBlock, ++block) {
    Rng rng(derive_seed(seed, block));
    const std::size_t end = std::min(mc_samples, start + kBlock);
    for (std::size_t s = start; s < end; ++s) {
      const Eigen::Vector2d pt(lo(0) + (hi(0) - lo(0)) * uniform01(rng), lo(1) + (hi(1) - lo(1)) * uniform01(rng));
      const Eigen::Vector2d da = pt - a.center, db = pt - b.center;
      const bool in_a = da.dot(ia * da) <= a.scale;
      const bool in_b = db.dot(ib * db) <= b.scale;
      both += in_a && in_b;
      either += in_a || in_b;
    }
  }
  return either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
}

inline double region_overlap(const Eigen::MatrixXd& real_scores, const Eigen::MatrixXd& synth_scores,
                             double level = 0.95, std::size_t mc_samples = 100000, std::uint64_t seed = 0) {
  return ellipse_overlap(fit_ellipse(real_scores, level), fit_ellipse(synth_scores, level), mc_samples, seed);
}

}  // namespace synthaudit::probes
