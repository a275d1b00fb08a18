#ifndef VCFAM_PENALIZED_HPP
#define VCFAM_PENALIZED_HPP

// Penalized generalized least squares shared by the VCFAM estimator and the
// baseline models.
//
//   theta = (X' S^-1 X + n Omega)^-1 X' S^-1 y,   S = sigma^2 R
//
// theta depends on sigma^2 and Omega only through sigma^2 * Omega, so the
// coefficient step uses the working correlation R (identity for iid errors,
// AR(1) otherwise) and sigma^2 is profiled from the residuals afterwards:
// sigma^2 = RSS_R / (n - df). The effective degrees of freedom are
// df = tr[X (X' R^-1 X + n Omega)^-1 X' R^-1].
//
// All penalties handed to PenalizedProblem are diagonal: callers rotate each
// term into a basis that simultaneously diagonalizes its penalty matrices.
// Together with symmetric diagonal scaling this keeps the Cholesky factor
// accurate even for lambda around 1e12.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numkit.hpp"

namespace vcfam {

enum class SigmaStructure { iid, ar1 };

inline std::string to_string(SigmaStructure s) { return s == SigmaStructure::iid ? "iid" : "ar1"; }

inline SigmaStructure sigma_structure_from_string(const std::string& s) {
  if (s == "iid") return SigmaStructure::iid;
  if (s == "ar1") return SigmaStructure::ar1;
  throw ParameterError("unknown sigma structure '" + s + "' (expected iid or ar1)");
}

/// Error covariance estimate. For ar1, `variance` is the innovation variance
/// and the marginal variance is variance / (1 - rho^2).
struct SigmaEstimate {
  SigmaStructure structure = SigmaStructure::iid;
  double variance = 1.0;
  double rho = 0.0;
  bool degenerate = false;
};

struct GlsOptions {
  SigmaStructure structure = SigmaStructure::iid;
  int max_iterations = 10;
  double tolerance = 1e-6;
};

struct FitDiagnostics {
  double hat_trace = 0.0;
  double log_likelihood = 0.0;
  Vector residuals;
  int gls_iterations = 0;
};

inline constexpr double variance_floor = 1e-300;
inline constexpr double rho_limit = 0.99;

/// Lag-1 sample autocorrelation.
inline double lag1_autocorrelation(const Vector& r) {
  const double denom = r.squaredNorm();
  if (r.size() < 2 || denom == 0.0)
    return 0.0;
  return r.head(r.size() - 1).dot(r.tail(r.size() - 1)) / denom;
}

/// Plug-in covariance from residuals: iid variance RSS/(n - df); ar1 adds the
/// clamped lag-1 autocorrelation and reports the innovation variance.
inline SigmaEstimate estimate_sigma(const Vector& residuals, SigmaStructure structure, double df = 0.0) {
  const auto n = static_cast<double>(residuals.size());
  if (residuals.size() < 3)
    throw ParameterError("estimate_sigma: need at least 3 residuals");
  if (!(n - df > 0.0))
    throw NumericalError("estimate_sigma: effective df " + std::to_string(df) + " leaves no residual degrees of freedom (n=" +
                         std::to_string(residuals.size()) + ")");
  SigmaEstimate out;
  out.structure = structure;
  const double marginal = residuals.squaredNorm() / (n - df);
  if (structure == SigmaStructure::ar1) {
    out.rho = std::clamp(lag1_autocorrelation(residuals), -rho_limit, rho_limit);
    out.variance = (1.0 - out.rho * out.rho) * marginal;
  } else {
    out.variance = marginal;
  }
  if (!(out.variance > variance_floor)) {
    out.variance = variance_floor;
    out.degenerate = true;
  }
  return out;
}

/// Applies the AR(1) whitening operator L (L'L = R^-1, unit innovation
/// scale) to the rows of `a`. rho = 0 is the identity.
inline Matrix ar1_whiten(const Matrix& a, double rho) {
  if (rho == 0.0)
    return a;
  Matrix out(a.rows(), a.cols());
  if (a.rows() == 0)
    return out;
  out.row(0) = std::sqrt(1.0 - rho * rho) * a.row(0);
  if (a.rows() > 1)
    out.bottomRows(a.rows() - 1) = a.bottomRows(a.rows() - 1) - rho * a.topRows(a.rows() - 1);
  return out;
}

/// Gaussian log-likelihood of the residual vector under the covariance estimate.
inline double gaussian_log_likelihood(const Vector& residuals, const SigmaEstimate& sigma) {
  const auto n = static_cast<double>(residuals.size());
  const double log2pi = std::log(2.0 * std::numbers::pi);
  if (sigma.structure == SigmaStructure::iid || sigma.rho == 0.0) {
    return -0.5 * n * log2pi - 0.5 * n * std::log(sigma.variance) - 0.5 * residuals.squaredNorm() / sigma.variance;
  }
  const Vector w = ar1_whiten(residuals, sigma.rho);
  const double logdet = n * std::log(sigma.variance) - std::log(1.0 - sigma.rho * sigma.rho);
  return -0.5 * n * log2pi - 0.5 * logdet - 0.5 * w.squaredNorm() / sigma.variance;
}

/// AIC = -2 log p(y; theta, Sigma) + 2 df.
inline double aic(const FitDiagnostics& diag, const SigmaEstimate& sigma) {
  return -2.0 * gaussian_log_likelihood(diag.residuals, sigma) + 2.0 * diag.hat_trace;
}

/// Result of one penalized fit in the problem's (rotated) coordinates.
struct PointFit {
  std::vector<double> lambdas;
  Vector theta;
  FitDiagnostics diagnostics;
  SigmaEstimate sigma;
  double aic = 0.0;
};

/// Design with diagonal penalties indexed by smoothing parameter:
/// Omega(lambda) = diag(sum_j lambda_j d_j).
class PenalizedProblem {
public:
  PenalizedProblem(Matrix design, Vector y, std::vector<Vector> penalty_diagonals, GlsOptions options = {})
      : x_(std::move(design)), y_(std::move(y)), penalties_(std::move(penalty_diagonals)), options_(options) {
    if (x_.rows() != y_.size())
      throw ShapeError("penalized fit: design has " + std::to_string(x_.rows()) + " rows, response has " +
                       std::to_string(y_.size()));
    if (x_.rows() < 3)
      throw ParameterError("penalized fit: need at least 3 observations");
    for (const auto& d : penalties_) {
      if (d.size() != x_.cols())
        throw ShapeError("penalized fit: penalty diagonal length does not match design columns");
      if ((d.array() < 0.0).any())
        throw ParameterError("penalized fit: penalties must be non-negative definite");
    }
    if (!x_.allFinite() || !y_.allFinite())
      throw DataError("penalized fit: non-finite design or response");
    if (options_.max_iterations < 1)
      throw ParameterError("penalized fit: max GLS iterations must be >= 1");
    cache(0.0);
  }

  Eigen::Index observations() const { return x_.rows(); }
  Eigen::Index parameters() const { return x_.cols(); }
  std::size_t lambda_count() const { return penalties_.size(); }
  const Matrix& design() const { return x_; }
  const Vector& response() const { return y_; }
  const GlsOptions& options() const { return options_; }

  Vector omega_diagonal(std::span<const double> lambdas) const {
    if (lambdas.size() != penalties_.size())
      throw ParameterError("penalized fit: expected " + std::to_string(penalties_.size()) + " smoothing parameters, got " +
                           std::to_string(lambdas.size()));
    Vector omega = Vector::Zero(x_.cols());
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
      if (!(lambdas[j] >= 0.0) || !std::isfinite(lambdas[j]))
        throw ParameterError("penalized fit: smoothing parameters must be finite and >= 0");
      omega += lambdas[j] * penalties_[j];
    }
    return omega;
  }

  PointFit fit(std::span<const double> lambdas) const {
    const Vector omega = omega_diagonal(lambdas);
    PointFit out;
    out.lambdas.assign(lambdas.begin(), lambdas.end());
    double rho = 0.0;
    Vector previous_theta;
    int iterations = 0;
    Solved solved;
    for (;;) {
      ++iterations;
      solved = solve(omega, rho);
      const Vector residuals = y_ - x_ * solved.theta;
      if (options_.structure == SigmaStructure::iid)
        break;
      const double next_rho = std::clamp(lag1_autocorrelation(residuals), -rho_limit, rho_limit);
      const bool theta_settled = previous_theta.size() == solved.theta.size() &&
                                 (solved.theta - previous_theta).norm() <= options_.tolerance * (1.0 + solved.theta.norm());
      const bool rho_settled = std::abs(next_rho - rho) <= options_.tolerance;
      previous_theta = solved.theta;
      if ((theta_settled && rho_settled) || iterations >= options_.max_iterations)
        break;
      rho = next_rho;
    }
    out.theta = solved.theta;
    out.diagnostics.residuals = y_ - x_ * solved.theta;
    out.diagnostics.hat_trace = solved.df;
    out.diagnostics.gls_iterations = iterations;
    out.sigma = estimate_sigma(out.diagnostics.residuals, options_.structure, solved.df);
    if (options_.structure == SigmaStructure::ar1) {
      // Profile the innovation variance with the rho the coefficients were fitted under.
      out.sigma.rho = rho;
      const Vector w = ar1_whiten(out.diagnostics.residuals, rho);
      out.sigma.variance = w.squaredNorm() / (static_cast<double>(y_.size()) - solved.df);
      out.sigma.degenerate = !(out.sigma.variance > variance_floor);
      out.sigma.variance = std::max(out.sigma.variance, variance_floor);
    }
    out.diagnostics.log_likelihood = gaussian_log_likelihood(out.diagnostics.residuals, out.sigma);
    out.aic = -2.0 * out.diagnostics.log_likelihood + 2.0 * out.diagnostics.hat_trace;
    return out;
  }

  PointFit fit(std::initializer_list<double> lambdas) const {
    const std::vector<double> v(lambdas);
    return fit(std::span<const double>(v));
  }

  /// Gradient of the penalized objective
  ///   -1/2 (y - X theta)' R^-1 (y - X theta) - n/2 theta' Omega theta
  /// whose stationary point is the closed-form estimator (working scale).
  Vector objective_gradient(const Vector& theta, std::span<const double> lambdas, double rho = 0.0) const {
    const Vector omega = omega_diagonal(lambdas);
    const Matrix xw = ar1_whiten(x_, rho);
    const Vector yw = ar1_whiten(y_, rho);
    const auto n = static_cast<double>(x_.rows());
    return xw.transpose() * (yw - xw * theta) - n * omega.cwiseProduct(theta);
  }

  double objective(const Vector& theta, std::span<const double> lambdas, double rho = 0.0) const {
    const Vector omega = omega_diagonal(lambdas);
    const Vector r = ar1_whiten(Vector(y_ - x_ * theta), rho);
    const auto n = static_cast<double>(x_.rows());
    return -0.5 * r.squaredNorm() - 0.5 * n * theta.dot(omega.cwiseProduct(theta));
  }

private:
  struct Solved {
    Vector theta;
    double df = 0.0;
  };

  void cache(double rho) const {
    if (cached_ && rho == cached_rho_)
      return;
    xw_ = ar1_whiten(x_, rho);
    const Vector yw = ar1_whiten(y_, rho);
    gram_ = Matrix::Zero(x_.cols(), x_.cols());
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(xw_.transpose());
    gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
    rhs_ = xw_.transpose() * yw;
    cached_rho_ = rho;
    cached_ = true;
  }

  Solved solve(const Vector& omega, double rho) const {
    cache(rho);
    const auto n = static_cast<double>(x_.rows());
    const Eigen::Index p = x_.cols();
    Matrix a = gram_;
    a.diagonal() += n * omega;
    Vector scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!(a(j, j) > 0.0))
        throw SingularError("penalized fit: coefficient is neither identified by the data nor penalized; increase the smoothing parameters",
                            static_cast<std::size_t>(j));
      scale(j) = 1.0 / std::sqrt(a(j, j));
    }
    a = scale.asDiagonal() * a * scale.asDiagonal();
    Eigen::LLT<Matrix> llt;
    try {
      llt = spd_factor(a, "penalized fit");
    } catch (const SingularError& e) {
      throw SingularError(std::string(e.what()) + "; the penalized normal equations are singular, try larger smoothing parameters",
                          e.pivot());
    }
    Solved out;
    out.theta = scale.cwiseProduct(llt.solve(Vector(scale.cwiseProduct(rhs_))));
    // df = tr(A^-1 G) = tr(Ls^-1 (S X' R^-1 X S) Ls^-T)
    if (x_.rows() <= p) {
      Matrix z = (xw_ * scale.asDiagonal()).transpose();
      llt.matrixL().solveInPlace(z);
      out.df = z.squaredNorm();
    } else {
      // A^-1 G = I - A^-1 n Omega, so only diag(A^-1) is needed.
      Matrix linv = Matrix::Identity(p, p);
      llt.matrixL().solveInPlace(linv);
      const Vector diag_inv = linv.colwise().squaredNorm().transpose(); // diag of scaled A^-1
      double penalized = 0.0;
      for (Eigen::Index j = 0; j < p; ++j)
        penalized += diag_inv(j) * scale(j) * scale(j) * n * omega(j);
      out.df = static_cast<double>(p) - penalized;
    }
    return out;
  }

  Matrix x_;
  Vector y_;
  std::vector<Vector> penalties_;
  GlsOptions options_;

  mutable bool cached_ = false;
  mutable double cached_rho_ = 0.0;
  mutable Matrix xw_;
  mutable Matrix gram_;
  mutable Vector rhs_;
};

/// Penalized fit with a general symmetric PSD penalty matrix. The penalty is
/// rotated to its eigenbasis and handed to PenalizedProblem; theta is
/// returned in the original coordinates.
inline std::pair<Vector, FitDiagnostics> fit(const Matrix& x, const Vector& y, const Matrix& omega,
                                             const GlsOptions& options = {}) {
  if (omega.rows() != x.cols() || omega.cols() != x.cols())
    throw ShapeError("fit: penalty must be p x p with p = design columns");
  const Matrix sym = 0.5 * (omega + omega.transpose());
  const SymEig eig = sym_eig(sym);
  const double tol = 1e-12 * std::max(1.0, eig.values.cwiseAbs().maxCoeff());
  if (eig.values.minCoeff() < -tol)
    throw ParameterError("fit: penalty matrix is not non-negative definite");
  // Round-off in the null space would otherwise be scaled up with the penalty.
  const Vector d = (eig.values.array() > tol).select(eig.values, 0.0);
  PenalizedProblem problem(x * eig.vectors, y, {d}, options);
  const PointFit pf = problem.fit({1.0});
  return {eig.vectors * pf.theta, pf.diagnostics};
}

struct GridPoint {
  std::vector<double> lambdas;
  bool ok = false;
  double aic = std::numeric_limits<double>::quiet_NaN();
  double df = std::numeric_limits<double>::quiet_NaN();
  double rss = std::numeric_limits<double>::quiet_NaN(); // whitened residual sum of squares
  double rho = 0.0;
  std::string message;
};

struct GridSearch {
  std::vector<GridPoint> points;
  std::size_t best = 0;
  PointFit best_fit;
  double common_variance = 1.0; // plug-in variance every point was scored with
  int selection_rounds = 0;
};

/// -2 log p(y; theta, Sigma) + 2 df with Sigma = variance * R(rho), from the
/// whitened RSS.
inline double aic_at_variance(double rss, double df, double rho, Eigen::Index n, double variance) {
  const auto nd = static_cast<double>(n);
  const double logdet = nd * std::log(variance) - std::log(1.0 - rho * rho);
  return nd * std::log(2.0 * std::numbers::pi) + logdet + rss / variance + 2.0 * df;
}

/// Cartesian-grid AIC minimization.
///
/// Profiling sigma^2 separately at every grid point lets AIC run off to -inf
/// as df approaches n (RSS shrinks faster than n - df when the design has
/// more columns than rows). Grid points are therefore scored under one common
/// plug-in Sigma: start from the most heavily penalized fit, select the AIC
/// minimizer, re-estimate sigma^2 = RSS/(n - df) from it, and repeat until
/// the selection is stable. Exact AIC ties go to the lexicographically larger
/// lambda vector.
inline GridSearch tune_grid(const PenalizedProblem& problem, const std::vector<std::vector<double>>& grids) {
  if (grids.size() != problem.lambda_count())
    throw ParameterError("tune: expected " + std::to_string(problem.lambda_count()) + " grids, got " +
                         std::to_string(grids.size()));
  for (const auto& g : grids) {
    if (g.empty())
      throw ParameterError("tune: smoothing-parameter grids must be nonempty");
    for (double v : g)
      if (!(v > 0.0) || !std::isfinite(v))
        throw ParameterError("tune: grid values must be positive");
  }
  const Eigen::Index n = problem.observations();
  GridSearch out;
  std::vector<PointFit> fits;
  std::vector<std::size_t> fit_of_point;
  std::vector<std::size_t> idx(grids.size(), 0);
  for (;;) {
    GridPoint point;
    for (std::size_t j = 0; j < grids.size(); ++j)
      point.lambdas.push_back(grids[j][idx[j]]);
    try {
      PointFit pf = problem.fit(std::span<const double>(point.lambdas));
      const double resid_dof = static_cast<double>(n) - pf.diagnostics.hat_trace;
      point.df = pf.diagnostics.hat_trace;
      point.rho = pf.sigma.rho;
      point.rss = pf.sigma.variance * resid_dof;
      point.ok = std::isfinite(point.rss) && resid_dof > 0.0;
      if (point.ok) {
        fit_of_point.push_back(out.points.size());
        fits.push_back(std::move(pf));
      } else {
        point.message = "no residual degrees of freedom";
      }
    } catch (const NumericalError& e) {
      point.message = e.what();
    }
    out.points.push_back(std::move(point));
    std::size_t j = 0;
    while (j < grids.size() && ++idx[j] == grids[j].size()) {
      idx[j] = 0;
      ++j;
    }
    if (j == grids.size())
      break;
  }
  if (fits.empty()) {
    std::string reason = out.points.front().message;
    throw NumericalError("tune: every grid point failed (" + reason + ")");
  }

  auto variance_of = [&](std::size_t f) {
    const GridPoint& p = out.points[fit_of_point[f]];
    return std::max(p.rss / (static_cast<double>(n) - p.df), variance_floor);
  };
  auto select = [&](double variance) {
    std::size_t best = 0;
    double best_aic = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < fits.size(); ++f) {
      const GridPoint& p = out.points[fit_of_point[f]];
      const double a = aic_at_variance(p.rss, p.df, p.rho, n, variance);
      if (a < best_aic || (a == best_aic && p.lambdas > out.points[fit_of_point[best]].lambdas)) {
        best = f;
        best_aic = a;
      }
    }
    return best;
  };

  std::size_t start = 0;
  for (std::size_t f = 1; f < fits.size(); ++f)
    if (out.points[fit_of_point[f]].df < out.points[fit_of_point[start]].df)
      start = f;
  double variance = variance_of(start);
  std::size_t chosen = select(variance);
  std::vector<std::size_t> visited{chosen};
  for (out.selection_rounds = 1; out.selection_rounds < 100; ++out.selection_rounds) {
    variance = variance_of(chosen);
    const std::size_t next = select(variance);
    if (next == chosen)
      break;
    if (std::find(visited.begin(), visited.end(), next) != visited.end()) {
      // Cycle: settle on the smoothest selection visited.
      for (std::size_t v : visited)
        if (out.points[fit_of_point[v]].df < out.points[fit_of_point[chosen]].df)
          chosen = v;
      variance = variance_of(chosen);
      break;
    }
    chosen = next;
    visited.push_back(chosen);
  }

  out.common_variance = variance;
  for (std::size_t f = 0; f < fits.size(); ++f) {
    GridPoint& p = out.points[fit_of_point[f]];
    p.aic = aic_at_variance(p.rss, p.df, p.rho, n, variance);
  }
  out.best = fit_of_point[chosen];
  out.best_fit = std::move(fits[chosen]);
  out.best_fit.sigma.variance = variance;
  out.best_fit.diagnostics.log_likelihood = gaussian_log_likelihood(out.best_fit.diagnostics.residuals, out.best_fit.sigma);
  out.best_fit.aic = out.points[out.best].aic;
  return out;
}

/// {10^lo, ..., 10^hi}.
inline std::vector<double> decade_grid(int lo, int hi) {
  std::vector<double> out;
  for (int e = lo; e <= hi; ++e)
    out.push_back(std::pow(10.0, e));
  return out;
}

} // namespace vcfam

#endif
