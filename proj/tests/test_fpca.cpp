#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <vcfam/fpca.hpp>
#include <vcfam/pipeline.hpp>
#include <vcfam/sim.hpp>
#include <vcfam/vcfam.hpp>

#include "support.hpp"

using namespace vcfam;
using vcfam::testing::ks_uniform;
using vcfam::testing::random_matrix;

namespace {

// Centered scores with exactly prescribed sample variances (1/n convention)
// and mutually orthogonal columns.
Matrix exact_scores(int n, const std::vector<double>& variances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto q = static_cast<Eigen::Index>(variances.size());
  Matrix m = random_matrix(n, q, rng);
  m.rowwise() -= m.colwise().mean();
  const Matrix qm = m.householderQr().householderQ() * Matrix::Identity(n, q);
  Matrix out(n, q);
  for (Eigen::Index k = 0; k < q; ++k)
    out.col(k) = qm.col(k) * std::sqrt(n * variances[static_cast<std::size_t>(k)]);
  return out;
}

// Fourier sample whose k-th eigenfunction is basis column k+1.
FunctionalSample fourier_sample(const Matrix& scores, int dim) {
  FunctionalSample s;
  s.basis = BasisSpec::fourier(dim, 0.0, 1.0);
  s.coefficients = Matrix::Zero(scores.rows(), dim);
  s.coefficients.middleCols(1, scores.cols()) = scores;
  s.mean_coefficients = Vector::Zero(dim);
  return s;
}

FunctionalSample random_centered_bspline(int n, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FunctionalSample s;
  s.basis = BasisSpec::bspline(k, 0.0, 1.0);
  s.coefficients = random_matrix(n, k, rng) * Vector::LinSpaced(k, 3.0, 0.2).asDiagonal();
  s.mean_coefficients = Vector::LinSpaced(k, 0.0, 1.0);
  return center(s);
}

} // namespace

TEST(GramMatrix, FourierIdentity) {
  EXPECT_LT((gram_matrix(BasisSpec::fourier(9, 0.0, 1.0)) - Matrix::Identity(9, 9)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(GramMatrix, BsplineMatchesTrapezoid) {
  const BasisSpec spec = BasisSpec::bspline(12, 0.0, 2.0);
  const Matrix g = gram_matrix(spec);
  EXPECT_EQ(g, g.transpose());
  EXPECT_GT(g.diagonal().minCoeff(), 0.0);
  const int np = 10001;
  const auto pts = linspace(0.0, 2.0, np);
  const Matrix b = eval_basis(spec, pts);
  Vector w = Vector::Constant(np, 2.0 / (np - 1));
  w(0) *= 0.5;
  w(np - 1) *= 0.5;
  const Matrix trap = b.transpose() * w.asDiagonal() * b;
  EXPECT_LT((g - trap).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FitFpca, RecoversExactFiniteRankScores) {
  const std::vector<double> vars{5.0, 2.0, 0.7};
  const Matrix xi = exact_scores(60, vars, 1);
  const FpcaModel m = fit_fpca(fourier_sample(xi, 9), 3);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(m.eigenvalues(k), vars[static_cast<std::size_t>(k)], 1e-10);
    const double sign = m.scores.col(k).dot(xi.col(k)) > 0 ? 1.0 : -1.0;
    EXPECT_LT((sign * m.scores.col(k) - xi.col(k)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(FitFpca, RankOneSpectrum) {
  const Matrix xi = exact_scores(40, {3.0}, 2);
  const FpcaModel m = fit_fpca(fourier_sample(xi, 7), 1);
  EXPECT_LT(m.spectrum(1) / m.spectrum(0), 1e-8);
  EXPECT_THROW(fit_fpca(fourier_sample(xi, 7), 2), ParameterError);
}

TEST(FitFpca, OrthonormalEigenfunctionsAndScoreMoments) {
  const FunctionalSample s = random_centered_bspline(80, 12, 3);
  const FpcaModel m = fit_fpca(s, 5);
  const Matrix& b = m.eigenfunction_coefficients;
  EXPECT_LT((b.transpose() * m.gram * b - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-6);
  for (int k = 0; k < 5; ++k) {
    if (k + 1 < 5) EXPECT_GT(m.eigenvalues(k), m.eigenvalues(k + 1));
    EXPECT_GT(m.eigenvalues(k), 0.0);
    EXPECT_LT(std::abs(m.scores.col(k).mean()), 1e-8 * std::sqrt(m.eigenvalues(k)));
    EXPECT_NEAR(m.scores.col(k).squaredNorm() / 80.0, m.eigenvalues(k), 1e-8 * m.eigenvalues(0));
  }
  EXPECT_LE(m.eigenvalues.sum(), m.total_variance * (1.0 + 1e-8));
}

TEST(FitFpca, TotalVarianceIsMeanSquaredNorm) {
  const FunctionalSample s = random_centered_bspline(50, 10, 4);
  const FpcaModel m = fit_fpca(s, 2);
  // (1/n) sum_i int x_i^2 by composite Simpson quadrature of evaluated curves.
  const int np = 4001;
  const Matrix v = evaluate(s, linspace(0.0, 1.0, np), false);
  Vector w(np);
  for (int j = 0; j < np; ++j) w(j) = (j == 0 || j == np - 1 ? 1.0 : (j % 2 ? 4.0 : 2.0)) / (3.0 * (np - 1));
  const double tv = (v.array().square().matrix() * w).sum() / 50.0;
  EXPECT_NEAR(m.total_variance, tv, 1e-6 * tv);
}

TEST(FitFpca, DeterministicSigns) {
  const FunctionalSample s = random_centered_bspline(50, 10, 5);
  const FpcaModel a = fit_fpca(s, 4), b = fit_fpca(s, 4);
  EXPECT_EQ(a.eigenfunction_coefficients, b.eigenfunction_coefficients);
  EXPECT_EQ(a.scores, b.scores);
  for (int k = 0; k < 4; ++k) {
    Eigen::Index arg = 0;
    a.eigenfunction_coefficients.col(k).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(a.eigenfunction_coefficients(arg, k), 0.0);
  }
}

TEST(FitFpca, ReconstructionErrorDecreasesWithQ) {
  SimConfig cfg;
  cfg.n = 200;
  const SimDataset d = generate(cfg);
  const FunctionalSample c = center(smooth_curves(d.raw, sim_curve_basis(d), default_curve_penalty));
  double prev = std::numeric_limits<double>::infinity();
  for (int q = 1; q <= 5; ++q) {
    const FpcaModel m = fit_fpca(c, q);
    const Matrix resid = c.coefficients - m.scores * m.eigenfunction_coefficients.transpose();
    const double err = (resid * m.gram * resid.transpose()).trace();
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(FitFpca, TiesFlagged) {
  const Matrix xi = exact_scores(30, {2.0, 2.0}, 6);
  const FpcaModel m = fit_fpca(fourier_sample(xi, 7), 2);
  EXPECT_TRUE(m.tie_warning);
  const Matrix xi2 = exact_scores(30, {2.0, 1.0}, 6);
  EXPECT_FALSE(fit_fpca(fourier_sample(xi2, 7), 2).tie_warning);
}

TEST(FitFpca, RejectsUncenteredAndBadQ) {
  FunctionalSample s = random_centered_bspline(20, 8, 7);
  EXPECT_THROW(fit_fpca(s, 0), ParameterError);
  EXPECT_THROW(fit_fpca(s, 9), ParameterError);
  s.coefficients.array() += 1.0;
  EXPECT_THROW(fit_fpca(s, 2), ParameterError);
}

TEST(FitFpca, LeadingEigenvalueOfSimulationDesign) {
  // lambda_1 = 45.25 * 0.64 = 28.96; within 15% in at least 90 of 100 draws.
  const double target = 45.25 * 0.64;
  int hits = 0;
  for (int rep = 0; rep < 100; ++rep) {
    SimConfig cfg;
    cfg.n = 500;
    cfg.seed = 1000 + static_cast<std::uint64_t>(rep);
    const SimDataset d = generate(cfg);
    const FunctionalSample c = center(smooth_curves(d.raw, sim_curve_basis(d), default_curve_penalty));
    const FpcaModel m = fit_fpca(c, 3);
    if (std::abs(m.eigenvalues(0) - target) <= 0.15 * target) ++hits;
  }
  EXPECT_GE(hits, 90);
}

TEST(ProjectScores, TrainingReproducesScores) {
  const FunctionalSample s = random_centered_bspline(40, 10, 8);
  const FpcaModel m = fit_fpca(s, 4);
  EXPECT_LT((project_scores(m, s) - m.scores).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ProjectScores, MeanCurveGivesZeroScores) {
  const FunctionalSample s = random_centered_bspline(40, 10, 9);
  const FpcaModel m = fit_fpca(s, 4);
  FunctionalSample mean_curve;
  mean_curve.basis = s.basis;
  mean_curve.coefficients = Matrix::Zero(1, 10);
  mean_curve.mean_coefficients = m.mean_coefficients;
  EXPECT_LT(project_scores(m, mean_curve).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ProjectScores, EigenfunctionHasUnitScore) {
  const FunctionalSample s = random_centered_bspline(40, 10, 10);
  const FpcaModel m = fit_fpca(s, 4);
  FunctionalSample phi1;
  phi1.basis = s.basis;
  phi1.coefficients = m.eigenfunction_coefficients.col(0).transpose();
  phi1.mean_coefficients = m.mean_coefficients;
  Vector expected = Vector::Zero(4);
  expected(0) = 1.0;
  EXPECT_LT((project_scores(m, phi1).row(0).transpose() - expected).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ProjectScores, BasisMismatchRejected) {
  const FunctionalSample s = random_centered_bspline(20, 10, 11);
  const FpcaModel m = fit_fpca(s, 2);
  const FunctionalSample other = random_centered_bspline(5, 9, 12);
  EXPECT_THROW(project_scores(m, other), DataError);
}

TEST(TransformScores, ZeroMapsToHalf) {
  const Matrix z = transform_scores(Matrix::Zero(3, 2), Vector::Constant(2, 4.0)).zeta;
  EXPECT_TRUE((z.array() == 0.5).all());
}

TEST(TransformScores, ProbabilityIntegralTransformIsUniform) {
  const int n = 1000;
  const Vector lam = (Vector(3) << 28.96, 18.5, 0.3).finished();
  std::mt19937_64 rng(13);
  Matrix xi(n, 3);
  for (int k = 0; k < 3; ++k) {
    std::normal_distribution<double> nd(0.0, std::sqrt(lam(k)));
    for (int i = 0; i < n; ++i) xi(i, k) = nd(rng);
  }
  const Matrix z = transform_scores(xi, lam).zeta;
  for (int k = 0; k < 3; ++k) {
    const Vector col = z.col(k);
    EXPECT_LT(ks_uniform(to_std(col)), 1.63 / std::sqrt(n));
  }
}

TEST(TransformScores, MonotoneAndInsideUnitInterval) {
  std::mt19937_64 rng(14);
  Matrix xi = random_matrix(200, 2, rng) * 5.0;
  xi(0, 0) = 1e6;
  xi(1, 0) = -1e6;
  const Matrix z = transform_scores(xi, Vector::Ones(2)).zeta;
  EXPECT_GT(z.minCoeff(), 0.0);
  EXPECT_LT(z.maxCoeff(), 1.0);
  // Far tails saturate at the clamp, so order is preserved weakly.
  for (int k = 0; k < 2; ++k) {
    std::vector<int> a(200);
    std::iota(a.begin(), a.end(), 0);
    std::sort(a.begin(), a.end(), [&](int i, int j) { return xi(i, k) < xi(j, k); });
    for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LE(z(a[i - 1], k), z(a[i], k));
  }
}

TEST(TransformScores, RejectsBadEigenvalues) {
  EXPECT_THROW(transform_scores(Matrix::Zero(2, 2), Vector::Zero(2)), ParameterError);
  EXPECT_THROW(transform_scores(Matrix::Zero(2, 2), Vector::Ones(3)), ShapeError);
}

TEST(SelectComponents, CumulativeVarianceRule) {
  const Vector spectrum = (Vector(5) << 50, 30, 15, 4, 1).finished();
  EXPECT_EQ(select_components(spectrum, 0.8, 10), 2);
  EXPECT_EQ(select_components(spectrum, 0.95, 10), 3);
  EXPECT_EQ(select_components(spectrum, 0.99, 10), 4);
  EXPECT_EQ(select_components(spectrum, 0.99, 3), 3);
}
