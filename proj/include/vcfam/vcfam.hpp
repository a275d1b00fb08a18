#ifndef VCFAM_VCFAM_HPP
#define VCFAM_VCFAM_HPP

// Varying-coefficient functional additive model
//
//   y_i = sum_k f_k(zeta_ik, t_i) + e_i,   f_k(z, t) = eta(z)' Theta_k psi(t)
//
// with cubic B-spline bases eta (m1, on [0,1]) and psi (m2, on the t range),
// estimated by penalized likelihood with the Kronecker penalty
// Omega = I_q (x) {lambda_zeta (I (x) P1) + lambda_t (P2 (x) I)} and tuned by AIC.

#include <vector>

#include "basis.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "numkit.hpp"
#include "penalized.hpp"

namespace vcfam {

/// Full tensor design: row i of block k is kron(psi(t_i)', eta(zeta_ik)').
inline Matrix build_design(const TransformedScores& zeta, const Vector& t, const BasisSpec& zeta_basis,
                           const BasisSpec& t_basis) {
  if (t.size() != zeta.zeta.rows())
    throw ShapeError("build_design: t must have one entry per row of zeta");
  const Eigen::Index q = zeta.zeta.cols();
  const BlockDesigns bd = block_designs(ModelKind::vcfam, zeta.zeta, zeta.zeta, t, zeta_basis, t_basis);
  const Eigen::Index w = static_cast<Eigen::Index>(zeta_basis.dimension) * t_basis.dimension;
  Matrix x(t.size(), q * w);
  for (Eigen::Index k = 0; k < q; ++k)
    x.middleCols(k * w, w) = bd.designs[static_cast<std::size_t>(k)];
  return x;
}

/// Omega = I_q (x) {lambda_zeta (I_m2 (x) P1) + lambda_t (P2 (x) I_m1)}.
inline Matrix build_penalty(int q, const VcfamConfig& config, const PenaltyMatrix& p1, const PenaltyMatrix& p2,
                            double lambda_zeta, double lambda_t) {
  if (q < 1)
    throw ParameterError("build_penalty: q must be >= 1");
  if (p1.matrix.rows() != config.m1 || p1.matrix.cols() != config.m1 || p2.matrix.rows() != config.m2 ||
      p2.matrix.cols() != config.m2)
    throw ShapeError("build_penalty: P1 must be m1 x m1 and P2 m2 x m2");
  const Matrix block = lambda_zeta * kron(Matrix::Identity(config.m2, config.m2), p1.matrix) +
                       lambda_t * kron(p2.matrix, Matrix::Identity(config.m1, config.m1));
  return kron(Matrix::Identity(q, q), block);
}

inline Matrix build_penalty(int q, const VcfamConfig& config, const PenaltyMatrix& p1, const PenaltyMatrix& p2) {
  return build_penalty(q, config, p1, p2, config.lambda_zeta, config.lambda_t);
}

/// AIC-tuned VCFAM over the Cartesian (lambda_zeta, lambda_t) grid.
inline ModelFit tune(const TrainingSet& data, const std::vector<double>& lambda_grid_zeta,
                     const std::vector<double>& lambda_grid_t, const VcfamConfig& config) {
  return fit_model(ModelKind::vcfam, data, config, {lambda_grid_zeta, lambda_grid_t});
}

/// VCFAM at the smoothing parameters stored in `config`.
inline ModelFit fit_vcfam(const TrainingSet& data, const VcfamConfig& config) {
  return tune(data, {config.lambda_zeta}, {config.lambda_t}, config);
}

/// f_k(zeta, t) on a grid: rows follow zeta_grid, columns t_grid. With
/// `center`, each column has its zeta-grid mean removed (display-time
/// version of E[f_k | t] = 0).
inline Matrix surface(const Model& model, int k, const std::vector<double>& zeta_grid, const std::vector<double>& t_grid,
                      bool center) {
  if (model.kind != ModelKind::vcfam)
    throw ParameterError("surface: only VCFAM models have bivariate component functions");
  if (k < 1 || k > model.q())
    throw ParameterError("surface: component " + std::to_string(k) + " out of range 1.." + std::to_string(model.q()));
  const Matrix eta = eval_basis(model.zeta_basis, zeta_grid);
  const Matrix psi = eval_basis(model.t_basis, t_grid);
  Matrix out = eta * model.theta(k) * psi.transpose();
  if (center && out.rows() > 0)
    out.rowwise() -= out.colwise().mean();
  return out;
}

/// Equally spaced grid with `count` points on [lo, hi].
inline std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 2)
    throw ParameterError("linspace: need at least two points");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] = i == count - 1 ? hi : lo + (hi - lo) * i / (count - 1);
  return out;
}

} // namespace vcfam

#endif
