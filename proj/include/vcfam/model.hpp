#ifndef VCFAM_MODEL_HPP
#define VCFAM_MODEL_HPP

// Shared representation of every fitted regression model (VCFAM and the four
// baselines). Each model is a sum of blocks; block b contributes
// design_b(new data) * vec(coefficients_b), so prediction and fitting use the
// same block designs.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "basis.hpp"
#include "errors.hpp"
#include "fpca.hpp"
#include "numkit.hpp"
#include "penalized.hpp"

namespace vcfam {

enum class ModelKind { vcfam, vcflm, fam1, fam2, flm };

inline constexpr ModelKind all_model_kinds[] = {ModelKind::vcfam, ModelKind::vcflm, ModelKind::fam1, ModelKind::fam2,
                                                ModelKind::flm};

inline std::string to_string(ModelKind kind) {
  switch (kind) {
  case ModelKind::vcfam: return "vcfam";
  case ModelKind::vcflm: return "vcflm";
  case ModelKind::fam1: return "fam1";
  case ModelKind::fam2: return "fam2";
  case ModelKind::flm: return "flm";
  }
  return "unknown";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  for (ModelKind k : all_model_kinds)
    if (to_string(k) == s)
      return k;
  throw ParameterError("unknown model kind '" + s + "' (expected vcfam, vcflm, fam1, fam2 or flm)");
}

/// Number of smoothing parameters each model tunes.
inline std::size_t lambda_count(ModelKind kind) {
  return (kind == ModelKind::vcfam || kind == ModelKind::fam1) ? 2 : 1;
}

/// Domain of the exogenous variable t and whether it wraps.
struct TDomain {
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;

  BasisSpec basis(int m2) const {
    return periodic ? BasisSpec::periodic_bspline(m2, lo, hi) : BasisSpec::bspline(m2, lo, hi);
  }
};

/// Estimation settings common to all model kinds. lambda_zeta / lambda_t are
/// the single-point values used when no grid is supplied.
struct VcfamConfig {
  int m1 = 10;
  int m2 = 8;
  double lambda_zeta = 1e-3;
  double lambda_t = 1e-3;
  SigmaStructure sigma_structure = SigmaStructure::iid;
  int max_gls_iterations = 10;
  double gls_tolerance = 1e-6;

  void validate() const {
    if (m1 < 4 || m2 < 4)
      throw ParameterError("m1 and m2 must be >= 4 for cubic splines");
    if (!(lambda_zeta > 0.0) || !(lambda_t > 0.0))
      throw ParameterError("smoothing parameters must be positive");
    if (max_gls_iterations < 1 || !(gls_tolerance > 0.0))
      throw ParameterError("GLS iteration settings must be positive");
  }

  GlsOptions gls() const { return {sigma_structure, max_gls_iterations, gls_tolerance}; }
};

struct Model {
  ModelKind kind = ModelKind::vcfam;
  std::vector<Matrix> blocks;
  BasisSpec zeta_basis;
  BasisSpec t_basis;
  FpcaModel fpca;
  double response_mean = 0.0;
  SigmaEstimate sigma;
  double df = 0.0;
  double aic = 0.0;
  std::vector<double> lambdas;
  VcfamConfig config;

  int q() const { return fpca.q; }

  /// Theta_k (m1 x m2) of a VCFAM model, k is 1-based.
  const Matrix& theta(int k) const {
    if (kind != ModelKind::vcfam)
      throw ParameterError("theta: only VCFAM models carry coefficient surfaces");
    if (k < 1 || k > static_cast<int>(blocks.size()))
      throw ParameterError("theta: component " + std::to_string(k) + " out of range 1.." + std::to_string(blocks.size()));
    return blocks[static_cast<std::size_t>(k - 1)];
  }
};

/// Output of a tuned fit: the model plus the diagnostics of the selected point
/// and the whole AIC grid.
struct ModelFit {
  Model model;
  FitDiagnostics diagnostics;
  GridSearch search;
  Vector fitted; // in-sample fitted values including response_mean
};

/// Training inputs shared by all models: FPCA (with training scores), the
/// exogenous variable and the response.
struct TrainingSet {
  FpcaModel fpca;
  Vector t;
  Vector y;
  TDomain t_domain;
};

namespace detail {

inline Vector clamp_t(const BasisSpec& t_basis, const Vector& t) {
  Vector out(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double v = t(i);
    if (!std::isfinite(v) || v < t_basis.lo - 1e-9 || v > t_basis.hi + 1e-9)
      throw DomainError("t=" + std::to_string(v) + " outside the fitted t range [" + std::to_string(t_basis.lo) + ", " +
                            std::to_string(t_basis.hi) + "]; extrapolation is not supported",
                        static_cast<std::size_t>(i));
    out(i) = std::clamp(v, t_basis.lo, t_basis.hi);
  }
  return out;
}

/// Row-wise Kronecker product: row i is kron(a.row(i), b.row(i)).
inline Matrix row_kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() * b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    out.middleCols(j * b.cols(), b.cols()) = b.array().colwise() * a.col(j).array();
  return out;
}

/// Orthonormal basis (m x (m-1)) of the complement of c.
inline Matrix complement_basis(const Vector& c) {
  const Matrix cm = c;
  Eigen::HouseholderQR<Matrix> qr(cm);
  const Matrix q = qr.householderQ() * Matrix::Identity(c.size(), c.size());
  return q.rightCols(c.size() - 1);
}

} // namespace detail

/// Original-coordinate design of each coefficient block, with block shapes.
struct BlockDesigns {
  std::vector<Matrix> designs;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
};

inline BlockDesigns block_designs(ModelKind kind, const Matrix& scores, const Matrix& zeta, const Vector& t,
                                  const BasisSpec& zeta_basis, const BasisSpec& t_basis) {
  const Eigen::Index q = scores.cols();
  if (zeta.cols() != q || zeta.rows() != scores.rows() || t.size() != scores.rows())
    throw ShapeError("block designs: scores, transformed scores and t must agree in size");
  BlockDesigns out;
  const Matrix psi = kind == ModelKind::fam2 || kind == ModelKind::flm ? Matrix() : eval_basis(t_basis, t);
  auto eta = [&](Eigen::Index k) {
    const Vector zk = zeta.col(k);
    return eval_basis(zeta_basis, zk);
  };
  switch (kind) {
  case ModelKind::vcfam:
    for (Eigen::Index k = 0; k < q; ++k) {
      out.designs.push_back(detail::row_kron(psi, eta(k)));
      out.shapes.emplace_back(zeta_basis.dimension, t_basis.dimension);
    }
    break;
  case ModelKind::vcflm:
    out.designs.push_back(psi);
    out.shapes.emplace_back(t_basis.dimension, 1);
    for (Eigen::Index k = 0; k < q; ++k) {
      out.designs.push_back(psi.array().colwise() * scores.col(k).array());
      out.shapes.emplace_back(t_basis.dimension, 1);
    }
    break;
  case ModelKind::fam1:
  case ModelKind::fam2:
    for (Eigen::Index k = 0; k < q; ++k) {
      out.designs.push_back(eta(k));
      out.shapes.emplace_back(zeta_basis.dimension, 1);
    }
    if (kind == ModelKind::fam1) {
      out.designs.push_back(psi);
      out.shapes.emplace_back(t_basis.dimension, 1);
    }
    break;
  case ModelKind::flm:
    out.designs.push_back(scores);
    out.shapes.emplace_back(q, 1);
    break;
  }
  return out;
}

/// A block prepared for fitting: `expand` maps the rotated, reduced
/// coefficients back to vec(block); penalties are diagonal in those
/// coordinates and tagged with their smoothing-parameter index.
struct Term {
  Matrix expand;
  std::vector<std::pair<std::size_t, Vector>> penalties;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

/// Term with one penalty S on the subspace spanned by the columns of `z`.
/// Eigenvalues of a penalty with round-off in its null space set to exactly
/// zero; otherwise very large smoothing parameters would penalize the null space.
inline Vector penalty_spectrum(const Vector& values) {
  const double tol = 1e-10 * std::max(1.0, values.cwiseAbs().maxCoeff());
  return (values.array() > tol).select(values, 0.0);
}

inline Term single_penalty_term(const Matrix& z, const Matrix& s, std::size_t lambda_index, Eigen::Index rows,
                                Eigen::Index cols) {
  Matrix reduced = z.transpose() * s * z;
  reduced = (0.5 * (reduced + reduced.transpose())).eval();
  const SymEig eig = sym_eig(reduced);
  Term term;
  term.expand = z * eig.vectors;
  term.penalties.emplace_back(lambda_index, penalty_spectrum(eig.values));
  term.rows = rows;
  term.cols = cols;
  return term;
}

/// Tensor term lambda_zeta (I (x) P1) + lambda_t (P2 (x) I) on vec(Theta),
/// optionally restricted to zeta-coefficients in span(z1).
inline Term tensor_term(const Matrix& p1, const Matrix& p2, const Matrix& z1) {
  Matrix p1r = z1.transpose() * p1 * z1;
  p1r = (0.5 * (p1r + p1r.transpose())).eval();
  const SymEig e1 = sym_eig(p1r);
  const SymEig e2 = sym_eig(p2);
  const Vector v1 = penalty_spectrum(e1.values), v2 = penalty_spectrum(e2.values);
  Term term;
  term.expand = kron(e2.vectors, z1 * e1.vectors);
  const Eigen::Index m1r = p1r.rows(), m2 = p2.rows();
  Vector dz(m1r * m2), dt(m1r * m2);
  for (Eigen::Index l = 0; l < m2; ++l)
    for (Eigen::Index h = 0; h < m1r; ++h) {
      dz(l * m1r + h) = v1(h);
      dt(l * m1r + h) = v2(l);
    }
  term.penalties.emplace_back(0, dz);
  term.penalties.emplace_back(1, dt);
  term.rows = p1.rows();
  term.cols = m2;
  return term;
}

/// Stacks rotated block designs and penalty diagonals into one problem.
inline PenalizedProblem assemble(const std::vector<Matrix>& designs, const std::vector<Term>& terms, const Vector& y,
                                 std::size_t n_lambda, const GlsOptions& gls) {
  Eigen::Index p = 0;
  for (const auto& term : terms)
    p += term.expand.cols();
  Matrix x(y.size(), p);
  std::vector<Vector> diags(n_lambda, Vector::Zero(p));
  Eigen::Index offset = 0;
  for (std::size_t b = 0; b < terms.size(); ++b) {
    const Eigen::Index w = terms[b].expand.cols();
    x.middleCols(offset, w).noalias() = designs[b] * terms[b].expand;
    for (const auto& [index, d] : terms[b].penalties)
      diags[index].segment(offset, w) = d;
    offset += w;
  }
  return PenalizedProblem(std::move(x), y, std::move(diags), gls);
}

inline std::vector<Matrix> unpack(const std::vector<Term>& terms, const Vector& theta) {
  std::vector<Matrix> blocks;
  Eigen::Index offset = 0;
  for (const auto& term : terms) {
    const Vector v = term.expand * theta.segment(offset, term.expand.cols());
    blocks.push_back(Eigen::Map<const Matrix>(v.data(), term.rows, term.cols));
    offset += term.expand.cols();
  }
  return blocks;
}

/// Terms (identifiability constraints plus rotated penalties) for a model kind.
/// VCFAM: block 1 keeps the full tensor; blocks 2..q drop the zeta-constant
/// direction, which every block would otherwise share as functions of t alone.
/// FAM1/FAM2: each additive function is centred over the training sample.
inline std::vector<Term> model_terms(ModelKind kind, const BlockDesigns& bd, const BasisSpec& zeta_basis,
                                     const BasisSpec& t_basis) {
  std::vector<Term> terms;
  const std::size_t nb = bd.designs.size();
  switch (kind) {
  case ModelKind::vcfam: {
    const Matrix p1 = penalty_for(zeta_basis).matrix;
    const Matrix p2 = penalty_for(t_basis).matrix;
    const Matrix full = Matrix::Identity(zeta_basis.dimension, zeta_basis.dimension);
    const Matrix reduced = detail::complement_basis(Vector::Ones(zeta_basis.dimension));
    for (std::size_t b = 0; b < nb; ++b)
      terms.push_back(tensor_term(p1, p2, b == 0 ? full : reduced));
    break;
  }
  case ModelKind::vcflm: {
    const Matrix p2 = penalty_for(t_basis).matrix;
    const Matrix id = Matrix::Identity(t_basis.dimension, t_basis.dimension);
    for (std::size_t b = 0; b < nb; ++b)
      terms.push_back(single_penalty_term(id, p2, 0, t_basis.dimension, 1));
    break;
  }
  case ModelKind::fam1:
  case ModelKind::fam2: {
    const Matrix p1 = penalty_for(zeta_basis).matrix;
    const std::size_t n_f = kind == ModelKind::fam1 ? nb - 1 : nb;
    for (std::size_t b = 0; b < n_f; ++b) {
      const Vector c = bd.designs[b].colwise().sum().transpose();
      terms.push_back(single_penalty_term(detail::complement_basis(c), p1, 0, zeta_basis.dimension, 1));
    }
    if (kind == ModelKind::fam1) {
      const Vector c = bd.designs.back().colwise().sum().transpose();
      terms.push_back(
          single_penalty_term(detail::complement_basis(c), penalty_for(t_basis).matrix, 1, t_basis.dimension, 1));
    }
    break;
  }
  case ModelKind::flm: {
    const Eigen::Index q = bd.designs.front().cols();
    Term term;
    term.expand = Matrix::Identity(q, q);
    term.penalties.emplace_back(0, Vector::Ones(q));
    term.rows = q;
    term.cols = 1;
    terms.push_back(std::move(term));
    break;
  }
  }
  return terms;
}

/// Design inputs for any kind: scores and their CDF transform.
inline BlockDesigns designs_for(const Model& model, const Matrix& scores, const Vector& t) {
  const TransformedScores z = transform_scores(scores, model.fpca.eigenvalues);
  const Vector tc = (model.kind == ModelKind::fam2 || model.kind == ModelKind::flm) ? t : detail::clamp_t(model.t_basis, t);
  return block_designs(model.kind, scores, z.zeta, tc, model.zeta_basis, model.t_basis);
}

/// Prediction from FPC scores (already projected with the training FPCA).
inline Vector predict_from_scores(const Model& model, const Matrix& scores, const Vector& t) {
  if (scores.cols() != model.q())
    throw ShapeError("predict: expected " + std::to_string(model.q()) + " score columns, got " +
                     std::to_string(scores.cols()));
  if (t.size() != scores.rows())
    throw ShapeError("predict: t and scores disagree in length");
  const BlockDesigns bd = designs_for(model, scores, t);
  Vector out = Vector::Constant(scores.rows(), model.response_mean);
  for (std::size_t b = 0; b < bd.designs.size(); ++b)
    out.noalias() += bd.designs[b] * Eigen::Map<const Vector>(model.blocks[b].data(), model.blocks[b].size());
  return out;
}

/// Prediction for new curves: project onto the training FPCA, transform,
/// evaluate the blocks and add back the response mean.
inline Vector predict(const Model& model, const FunctionalSample& curves, const Vector& t) {
  return predict_from_scores(model, project_scores(model.fpca, curves), t);
}

/// Everything fixed before smoothing parameters are chosen: model skeleton,
/// identifiable terms and the assembled penalized problem (centred response).
struct PreparedFit {
  Model model;
  std::vector<Term> terms;
  PenalizedProblem problem;
};

inline PreparedFit prepare_fit(ModelKind kind, const TrainingSet& data, const VcfamConfig& config) {
  config.validate();
  const FpcaModel& fpca = data.fpca;
  const Eigen::Index n = fpca.scores.rows();
  if (data.t.size() != n || data.y.size() != n)
    throw ShapeError("fit: scores, t and y must have the same number of rows");
  if (!data.y.allFinite())
    throw DataError("fit: response contains non-finite values");

  Model model;
  model.kind = kind;
  model.fpca = fpca;
  model.config = config;
  model.zeta_basis = BasisSpec::bspline(config.m1, 0.0, 1.0);
  model.t_basis = data.t_domain.basis(config.m2);
  model.response_mean = data.y.mean();

  const BlockDesigns bd = designs_for(model, fpca.scores, data.t);
  std::vector<Term> terms = model_terms(kind, bd, model.zeta_basis, model.t_basis);
  const Vector yc = data.y.array() - model.response_mean;
  PenalizedProblem problem = assemble(bd.designs, terms, yc, lambda_count(kind), config.gls());
  return {std::move(model), std::move(terms), std::move(problem)};
}

/// Fills the model from the selected point fit.
inline ModelFit finish_fit(PreparedFit& prepared, const PointFit& best, GridSearch search) {
  Model& model = prepared.model;
  const ModelKind kind = model.kind;
  model.blocks = unpack(prepared.terms, best.theta);
  model.lambdas = best.lambdas;
  model.sigma = best.sigma;
  model.df = best.diagnostics.hat_trace;
  model.aic = best.aic;
  if (kind == ModelKind::vcfam) {
    model.config.lambda_zeta = best.lambdas[0];
    model.config.lambda_t = best.lambdas[1];
  } else if (kind == ModelKind::vcflm) {
    model.config.lambda_t = best.lambdas[0];
  } else {
    model.config.lambda_zeta = best.lambdas[0];
    if (kind == ModelKind::fam1)
      model.config.lambda_t = best.lambdas[1];
  }
  ModelFit out;
  out.search = std::move(search);
  out.diagnostics = best.diagnostics;
  out.fitted = prepared.problem.design() * best.theta;
  out.fitted.array() += model.response_mean;
  out.model = std::move(model);
  return out;
}

/// Tunes a model of the given kind over the Cartesian product of `grids`
/// (one grid per smoothing parameter of that kind) by AIC.
inline ModelFit fit_model(ModelKind kind, const TrainingSet& data, const VcfamConfig& config,
                          const std::vector<std::vector<double>>& grids) {
  if (grids.size() != lambda_count(kind))
    throw ParameterError(to_string(kind) + " tunes " + std::to_string(lambda_count(kind)) + " smoothing parameter(s), got " +
                         std::to_string(grids.size()) + " grid(s)");
  PreparedFit prepared = prepare_fit(kind, data, config);
  GridSearch search = tune_grid(prepared.problem, grids);
  const PointFit best = search.best_fit;
  return finish_fit(prepared, best, std::move(search));
}

/// Single fit at fixed smoothing parameters (zero allowed), with sigma^2
/// profiled at that point.
inline ModelFit fit_model_at(ModelKind kind, const TrainingSet& data, const VcfamConfig& config,
                             const std::vector<double>& lambdas) {
  if (lambdas.size() != lambda_count(kind))
    throw ParameterError(to_string(kind) + " takes " + std::to_string(lambda_count(kind)) + " smoothing parameter(s)");
  PreparedFit prepared = prepare_fit(kind, data, config);
  const PointFit pf = prepared.problem.fit(std::span<const double>(lambdas));
  return finish_fit(prepared, pf, GridSearch{});
}

/// Default per-kind grids: the 10^-6..10^1 decade grid for every smoothing parameter.
inline std::vector<std::vector<double>> default_grids(ModelKind kind) {
  return std::vector<std::vector<double>>(lambda_count(kind), decade_grid(-6, 1));
}

} // namespace vcfam

#endif
