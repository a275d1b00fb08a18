#ifndef VCFAM_FPCA_HPP
#define VCFAM_FPCA_HPP

// Functional principal components in coefficient space. With C the centered
// coefficient matrix and W the basis Gram matrix, the covariance operator is
// represented by the symmetric matrix (1/n) W^{1/2} C'C W^{1/2}; its
// eigenvectors u_k map back to eigenfunction coefficients b_k = W^{-1/2} u_k,
// which are orthonormal in L2 (b_j' W b_k = delta_jk).

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "basis.hpp"
#include "errors.hpp"
#include "fdata.hpp"
#include "numkit.hpp"

namespace vcfam {

struct FpcaModel {
  BasisSpec basis;
  Vector eigenvalues;                // lambda_1 > ... > lambda_q > 0
  Matrix eigenfunction_coefficients; // K x q
  Matrix scores;                     // n x q (training curves)
  Vector mean_coefficients;          // training mean removed before the fit
  Vector spectrum;                   // all K eigenvalues, descending, negatives clipped to 0
  Matrix gram;                       // K x K
  double total_variance = 0.0;       // (1/n) sum_i int x_i^2
  bool tie_warning = false;
  int q = 0;
};

struct TransformedScores {
  Matrix zeta; // n x q, entries in (0, 1)
};

/// Pairwise L2 inner products of the basis functions over the domain.
inline Matrix gram_matrix(const BasisSpec& spec) {
  spec.validate();
  if (spec.kind == BasisKind::fourier)
    return (spec.hi - spec.lo) * Matrix::Identity(spec.dimension, spec.dimension);
  // Piecewise polynomials of degree <= 7 per product: 8-point Gauss-Legendre
  // per knot interval is exact.
  using quad = boost::math::quadrature::gauss<double, 8>;
  const auto breaks = spec.breakpoints();
  std::vector<double> nodes, weights;
  for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
    const double half = 0.5 * (breaks[j + 1] - breaks[j]);
    const double mid = 0.5 * (breaks[j + 1] + breaks[j]);
    const auto& abscissa = quad::abscissa();
    const auto& w = quad::weights();
    for (std::size_t a = 0; a < abscissa.size(); ++a) {
      const double x = abscissa[a];
      const int reps = x == 0.0 ? 1 : 2;
      for (int s = 0; s < reps; ++s) {
        nodes.push_back(mid + (s == 0 ? x : -x) * half);
        weights.push_back(w[a] * half);
      }
    }
  }
  const Matrix b = eval_basis(spec, nodes);
  const Vector wv = to_vector(weights);
  Matrix g = b.transpose() * wv.asDiagonal() * b;
  return 0.5 * (g + g.transpose());
}

namespace detail {

struct GramRoots {
  Matrix half;
  Matrix inv_half;
};

inline GramRoots gram_roots(const Matrix& gram) {
  const SymEig eig = sym_eig(gram);
  if (eig.values.minCoeff() < 1e-12)
    throw NumericalError("fpca: basis Gram matrix is singular (smallest eigenvalue " +
                         std::to_string(eig.values.minCoeff()) + ")");
  const Vector root = eig.values.cwiseSqrt();
  return {eig.vectors * root.asDiagonal() * eig.vectors.transpose(),
          eig.vectors * root.cwiseInverse().asDiagonal() * eig.vectors.transpose()};
}

inline void require_centered(const FunctionalSample& sample) {
  const double scale = 1.0 + (sample.coefficients.size() ? sample.coefficients.cwiseAbs().maxCoeff() : 0.0);
  const double worst = sample.coefficients.colwise().mean().cwiseAbs().maxCoeff();
  if (worst > 1e-8 * scale)
    throw ParameterError("fit_fpca: sample is not centered (max column mean " + std::to_string(worst) + ")");
}

} // namespace detail

/// FPCA of a centered sample keeping the leading q components.
inline FpcaModel fit_fpca(const FunctionalSample& sample, int q) {
  const Eigen::Index n = sample.size();
  const int k_dim = sample.basis.dimension;
  if (q < 1 || q > std::min<Eigen::Index>(n - 1, k_dim))
    throw ParameterError("fit_fpca: q=" + std::to_string(q) + " must lie in [1, min(n-1, K)=" +
                         std::to_string(std::min<Eigen::Index>(n - 1, k_dim)) + "]");
  detail::require_centered(sample);

  FpcaModel model;
  model.basis = sample.basis;
  model.gram = gram_matrix(sample.basis);
  model.mean_coefficients = sample.mean_coefficients;
  model.q = q;
  const auto roots = detail::gram_roots(model.gram);

  const Matrix& c = sample.coefficients;
  Matrix cov = roots.half * (c.transpose() * c) * roots.half / static_cast<double>(n);
  cov = (0.5 * (cov + cov.transpose())).eval();
  const SymEig eig = sym_eig(cov);
  model.spectrum = eig.values.cwiseMax(0.0);
  model.total_variance = cov.trace();

  if (!(eig.values(q - 1) > 1e-12 * std::max(eig.values(0), 1e-300)))
    throw ParameterError("fit_fpca: q=" + std::to_string(q) + " exceeds the numerical rank of the sample");
  for (int k = 0; k + 1 < q; ++k)
    if (eig.values(k) - eig.values(k + 1) <= 1e-10 * eig.values(k))
      model.tie_warning = true;

  model.eigenvalues = eig.values.head(q);
  model.eigenfunction_coefficients = roots.inv_half * eig.vectors.leftCols(q);
  // Sign convention: the largest-magnitude coefficient of each eigenfunction is positive.
  for (int k = 0; k < q; ++k) {
    Eigen::Index arg = 0;
    model.eigenfunction_coefficients.col(k).cwiseAbs().maxCoeff(&arg);
    if (model.eigenfunction_coefficients(arg, k) < 0.0)
      model.eigenfunction_coefficients.col(k) *= -1.0;
  }
  model.scores = c * model.gram * model.eigenfunction_coefficients;
  return model;
}

/// Smallest q whose leading eigenvalues explain at least `threshold` of the
/// total variance, capped at `cap` and at the numerical rank.
inline int select_components(const Vector& spectrum, double threshold, int cap) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw ParameterError("select_components: threshold must lie in (0, 1]");
  if (cap < 1)
    throw ParameterError("select_components: cap must be >= 1");
  const double total = spectrum.sum();
  if (!(total > 0.0))
    throw NumericalError("select_components: sample has zero variance");
  int rank = 0;
  for (Eigen::Index k = 0; k < spectrum.size(); ++k)
    if (spectrum(k) > 1e-12 * spectrum(0)) ++rank;
  double acc = 0.0;
  int q = 0;
  while (q < spectrum.size()) {
    acc += spectrum(q);
    ++q;
    if (acc >= threshold * total) break;
  }
  return std::max(1, std::min({q, cap, rank}));
}

/// Full eigenvalue spectrum of a centered sample (for choosing q).
inline Vector fpca_spectrum(const FunctionalSample& sample) {
  detail::require_centered(sample);
  const auto roots = detail::gram_roots(gram_matrix(sample.basis));
  const Matrix& c = sample.coefficients;
  Matrix cov = roots.half * (c.transpose() * c) * roots.half / static_cast<double>(sample.size());
  cov = (0.5 * (cov + cov.transpose())).eval();
  return sym_eig(cov).values.cwiseMax(0.0);
}

/// Scores of (possibly new) curves against a fitted model, centering with the
/// training mean.
inline Matrix project_scores(const FpcaModel& model, const FunctionalSample& sample) {
  if (!(sample.basis == model.basis))
    throw DataError("project_scores: sample basis differs from the FPCA basis");
  const Eigen::RowVectorXd shift = (sample.mean_coefficients - model.mean_coefficients).transpose();
  Matrix dev = sample.coefficients;
  dev.rowwise() += shift;
  return dev * model.gram * model.eigenfunction_coefficients;
}

/// zeta_ik = Phi(xi_ik; 0, lambda_k), kept strictly inside (0, 1).
inline TransformedScores transform_scores(const Matrix& scores, const Vector& eigenvalues) {
  if (scores.cols() != eigenvalues.size())
    throw ShapeError("transform_scores: one eigenvalue per score column required");
  for (Eigen::Index k = 0; k < eigenvalues.size(); ++k)
    if (!(eigenvalues(k) > 0.0))
      throw ParameterError("transform_scores: eigenvalues must be positive");
  constexpr double eps = std::numeric_limits<double>::epsilon();
  TransformedScores out;
  out.zeta.resize(scores.rows(), scores.cols());
  for (Eigen::Index k = 0; k < scores.cols(); ++k)
    for (Eigen::Index i = 0; i < scores.rows(); ++i)
      out.zeta(i, k) = std::clamp(gaussian_cdf(scores(i, k), 0.0, eigenvalues(k)), eps, 1.0 - eps);
  return out;
}

} // namespace vcfam

#endif
