#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synthaudit/error.hpp"

namespace synthaudit::glasso {

/// Symmetric positive semidefinite matrix with its smallest eigenvalue.
struct PsdMatrix {
  Eigen::MatrixXd m;
  double min_eigenvalue = 0;
};

inline bool is_symmetric(const Eigen::MatrixXd& m, double tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// Projects a symmetric matrix onto the PSD cone by clipping eigenvalues at a
/// floor, then rescales to unit diagonal. The floor is raised until the
/// rescaled result has smallest eigenvalue >= eps. Inputs that are already
/// PSD with unit diagonal and min eigenvalue >= eps come back unchanged.
inline PsdMatrix nearest_psd(const Eigen::MatrixXd& m, double eps = 1e-6) {
  require(m.rows() == m.cols(), ErrorCode::invalid_input, "nearest_psd needs a square matrix");
  require(is_symmetric(m), ErrorCode::invalid_input, "nearest_psd needs a symmetric matrix");
  require(eps > 0 && eps < 1, ErrorCode::invalid_input, "eps must lie in (0, 1)");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  if (sym.size() == 0) return {sym, 0.0};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const bool unit_diag = (sym.diagonal().array() - 1.0).abs().maxCoeff() <= 1e-12;
  if (es.eigenvalues().minCoeff() >= eps && unit_diag) return {sym, es.eigenvalues().minCoeff()};

  double floor = eps;
  PsdMatrix out;
  for (int attempt = 0; attempt < 200; ++attempt) {
    const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(floor);
    Eigen::MatrixXd r = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::VectorXd d = r.diagonal().cwiseSqrt().cwiseInverse();
    r = d.asDiagonal() * r * d.asDiagonal();
    r = 0.5 * (r + r.transpose());
    r.diagonal().setOnes();
    const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    out = {r, lo};
    if (lo >= eps) return out;
    floor *= std::max(1.0 + 1e-6, eps / std::max(lo, eps * 1e-3));
  }
  fail(ErrorCode::convergence, "nearest_psd could not reach the eigenvalue floor");
}

struct PrecisionResult {
  Eigen::MatrixXd theta;
  Eigen::MatrixXd w;
  double lambda = 0;
  double ebic = std::numeric_limits<double>::quiet_NaN();
  std::size_t edge_count = 0;
  std::size_t n_iter = 0;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, PrecisionResult last)
      : Error(ErrorCode::convergence, what), last_(std::move(last)) {}
  const PrecisionResult& last_iterate() const { return last_; }

 private:
  PrecisionResult last_;
};

inline std::size_t count_edges(const Eigen::MatrixXd& theta) {
  std::size_t e = 0;
  for (Eigen::Index j = 1; j < theta.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i)
      if (theta(i, j) != 0.0) ++e;
  return e;
}

namespace detail {

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Coordinate descent for min_b 1/2 b'Vb - u'b + lambda |b|_1, warm-started
// from b. Returns false if the sweep budget runs out.
inline bool lasso_cd(const Eigen::MatrixXd& v, const Eigen::VectorXd& u, double lambda, Eigen::VectorXd& b,
                     double tol, int max_sweeps) {
  const Eigen::Index k = u.size();
  Eigen::VectorXd vb = v * b;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double delta = 0;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double partial = u(i) - (vb(i) - v(i, i) * b(i));
      const double next = soft_threshold(partial, lambda) / v(i, i);
      const double change = next - b(i);
      if (change != 0.0) {
        vb += v.col(i) * change;
        b(i) = next;
        delta = std::max(delta, std::abs(change));
      }
    }
    if (delta < tol) return true;
  }
  return false;
}

inline Eigen::MatrixXd drop_index(const Eigen::MatrixXd& m, Eigen::Index j) {
  const Eigen::Index p = m.rows();
  Eigen::MatrixXd out(p - 1, p - 1);
  for (Eigen::Index r = 0, rr = 0; r < p; ++r) {
    if (r == j) continue;
    for (Eigen::Index c = 0, cc = 0; c < p; ++c) {
      if (c == j) continue;
      out(rr, cc++) = m(r, c);
    }
    ++rr;
  }
  return out;
}

inline Eigen::VectorXd drop_entry(const Eigen::VectorXd& v, Eigen::Index j) {
  Eigen::VectorXd out(v.size() - 1);
  for (Eigen::Index r = 0, rr = 0; r < v.size(); ++r)
    if (r != j) out(rr++) = v(r);
  return out;
}

}  // namespace detail

/// Graphical lasso with an off-diagonal L1 penalty, by block coordinate
/// descent over rows/columns of the covariance estimate W; each block is a
/// lasso problem solved by coordinate descent. Converged when no entry of W
/// moves by tol or more in a full pass.
inline PrecisionResult graphical_lasso(const Eigen::MatrixXd& s, double lambda, double tol = 1e-5,
                                       std::size_t max_iter = 500) {
  const Eigen::Index p = s.rows();
  require(p >= 1 && s.cols() == p, ErrorCode::invalid_input, "glasso needs a nonempty square matrix");
  require(is_symmetric(s, 1e-10), ErrorCode::invalid_input, "glasso input is not symmetric");
  require((s.diagonal().array() > 0).all(), ErrorCode::invalid_input, "glasso input needs a positive diagonal");
  require(lambda >= 0 && std::isfinite(lambda), ErrorCode::invalid_input, "lambda must be finite and >= 0");
  require(tol > 0, ErrorCode::invalid_input, "tol must be > 0");
  if (lambda == 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    const double scale = s.diagonal().maxCoeff();
    const auto ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s, Eigen::EigenvaluesOnly).eigenvalues();
    require(llt.info() == Eigen::Success && ev.minCoeff() > 1e-12 * scale, ErrorCode::singular,
            "lambda = 0 needs a nonsingular input");
  }

  PrecisionResult res;
  res.lambda = lambda;
  Eigen::MatrixXd w = s;
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(p - 1, 0), p);
  const double inner_tol = std::min(tol, 1e-6) * 1e-6 * s.diagonal().maxCoeff();

  bool converged = p == 1;
  std::size_t iter = 0;
  while (!converged && iter < max_iter) {
    ++iter;
    double change = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const Eigen::MatrixXd w11 = detail::drop_index(w, j);
      const Eigen::VectorXd s12 = detail::drop_entry(s.col(j), j);
      Eigen::VectorXd b = beta.col(j);
      detail::lasso_cd(w11, s12, lambda, b, inner_tol, 100000);
      beta.col(j) = b;
      const Eigen::VectorXd w12 = w11 * b;
      for (Eigen::Index r = 0, rr = 0; r < p; ++r) {
        if (r == j) continue;
        change = std::max(change, std::abs(w(r, j) - w12(rr)));
        w(r, j) = w(j, r) = w12(rr++);
      }
    }
    converged = change < tol;
  }

  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::VectorXd b = p > 1 ? Eigen::VectorXd(beta.col(j)) : Eigen::VectorXd();
    const Eigen::VectorXd w12 = p > 1 ? detail::drop_entry(w.col(j), j) : Eigen::VectorXd();
    const double tjj = 1.0 / (w(j, j) - (p > 1 ? w12.dot(b) : 0.0));
    theta(j, j) = tjj;
    for (Eigen::Index r = 0, rr = 0; r < p; ++r) {
      if (r == j) continue;
      theta(r, j) = -b(rr++) * tjj;
    }
  }
  // Symmetrize; an entry zeroed from either side stays zero.
  for (Eigen::Index j = 1; j < p; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double v = (theta(i, j) == 0.0 || theta(j, i) == 0.0) ? 0.0 : 0.5 * (theta(i, j) + theta(j, i));
      theta(i, j) = theta(j, i) = v;
    }
  }
  res.theta = std::move(theta);
  res.w = std::move(w);
  res.edge_count = count_edges(res.theta);
  res.n_iter = iter;
  if (!converged)
    throw ConvergenceError("glasso did not converge in " + std::to_string(max_iter) + " iterations", res);
  Eigen::LLT<Eigen::MatrixXd> llt(res.theta);
  require(llt.info() == Eigen::Success, ErrorCode::convergence, "glasso returned a non positive-definite estimate");
  return res;
}

inline PrecisionResult graphical_lasso(const PsdMatrix& s, double lambda, double tol = 1e-5,
                                       std::size_t max_iter = 500) {
  return graphical_lasso(s.m, lambda, tol, max_iter);
}

/// Gaussian log-likelihood up to constants: (n/2)(log det theta - tr(S theta)).
inline double log_likelihood(const Eigen::MatrixXd& s, const Eigen::MatrixXd& theta, double n) {
  Eigen::LLT<Eigen::MatrixXd> llt(theta);
  require(llt.info() == Eigen::Success, ErrorCode::invalid_input, "theta is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  return 0.5 * n * (logdet - (s * theta).trace());
}

/// EBIC = -2 loglik + |E| log n + 4 |E| gamma log p.
inline double ebic(const Eigen::MatrixXd& s, const PrecisionResult& fit, double n, double gamma) {
  const double e = static_cast<double>(fit.edge_count);
  const double p = static_cast<double>(s.rows());
  return -2.0 * log_likelihood(s, fit.theta, n) + e * std::log(n) + 4.0 * e * gamma * std::log(p);
}

/// `n_points` log-spaced penalties from min_ratio * lambda_max up to
/// lambda_max = max off-diagonal |s_ij|, ascending. A diagonal input yields {0}.
inline std::vector<double> default_lambda_grid(const Eigen::MatrixXd& s, std::size_t n_points = 50,
                                               double min_ratio = 0.01) {
  require(n_points >= 1, ErrorCode::invalid_input, "lambda grid needs at least one point");
  require(min_ratio > 0 && min_ratio <= 1, ErrorCode::invalid_input, "min_ratio must lie in (0, 1]");
  double lmax = 0;
  for (Eigen::Index j = 1; j < s.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i) lmax = std::max(lmax, std::abs(s(i, j)));
  if (lmax == 0) return {0.0};
  std::vector<double> grid;
  if (n_points == 1) return {lmax};
  const double lo = std::log(min_ratio * lmax), hi = std::log(lmax);
  for (std::size_t k = 0; k < n_points; ++k)
    grid.push_back(std::exp(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n_points - 1)));
  grid.back() = lmax;
  return grid;
}

struct GridPoint {
  double lambda = 0;
  double ebic = std::numeric_limits<double>::quiet_NaN();
  std::size_t edge_count = 0;
  bool ok = false;
  std::string error;
};

struct EbicSelection {
  PrecisionResult best;
  std::vector<GridPoint> path;  // one entry per grid value, input order
};

/// Fits every penalty in the grid and keeps the EBIC minimiser; ties go to the
/// larger penalty.
inline EbicSelection ebic_select(const Eigen::MatrixXd& s, double n, const std::vector<double>& lambda_grid,
                                 double gamma = 0.5, double tol = 1e-5, std::size_t max_iter = 500) {
  require(!lambda_grid.empty(), ErrorCode::invalid_input, "empty lambda grid");
  require(n >= 2, ErrorCode::invalid_input, "EBIC needs n >= 2");
  require(gamma >= 0 && gamma <= 1, ErrorCode::invalid_input, "gamma must lie in [0, 1]");
  for (double l : lambda_grid) require(l >= 0, ErrorCode::invalid_input, "negative lambda in grid");
  EbicSelection out;
  std::optional<PrecisionResult> best;
  for (double lambda : lambda_grid) {
    GridPoint gp;
    gp.lambda = lambda;
    try {
      auto fit = graphical_lasso(s, lambda, tol, max_iter);
      fit.ebic = ebic(s, fit, n, gamma);
      gp.ebic = fit.ebic;
      gp.edge_count = fit.edge_count;
      gp.ok = true;
      if (!best || fit.ebic < best->ebic || (fit.ebic == best->ebic && lambda > best->lambda)) best = std::move(fit);
    } catch (const Error& e) {
      gp.error = e.what();
    }
    out.path.push_back(std::move(gp));
  }
  require(best.has_value(), ErrorCode::convergence, "every glasso fit on the grid failed");
  out.best = std::move(*best);
  return out;
}

inline EbicSelection ebic_select(const PsdMatrix& s, double n, const std::vector<double>& lambda_grid,
                                 double gamma = 0.5, double tol = 1e-5, std::size_t max_iter = 500) {
  return ebic_select(s.m, n, lambda_grid, gamma, tol, max_iter);
}

/// rho_ij = -theta_ij / sqrt(theta_ii theta_jj), unit diagonal.
inline Eigen::MatrixXd partial_correlations(const Eigen::MatrixXd& theta) {
  require(theta.rows() == theta.cols(), ErrorCode::invalid_input, "theta must be square");
  require((theta.diagonal().array() > 0).all(), ErrorCode::invalid_input, "theta needs a positive diagonal");
  const Eigen::VectorXd d = theta.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd rho = -(d.asDiagonal() * theta * d.asDiagonal());
  rho.diagonal().setOnes();
  return rho;
}

}  // namespace synthaudit::glasso
