#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <vcfam/fdata.hpp>
#include <vcfam/vcfam.hpp>

#include "support.hpp"

using namespace vcfam;
using vcfam::testing::random_matrix;

namespace {

RawCurves make_raw(const std::vector<double>& grid, const Matrix& values) { return {grid, values}; }

FunctionalSample random_sample(int n, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FunctionalSample s;
  s.basis = BasisSpec::bspline(k, 0.0, 1.0);
  s.coefficients = random_matrix(n, k, rng);
  s.mean_coefficients = Vector::Zero(k);
  return s;
}

} // namespace

TEST(SmoothCurves, ConstantCurveReproduced) {
  const auto grid = linspace(0.0, 1.0, 21);
  const Matrix values = Matrix::Constant(3, 21, 5.0);
  const FunctionalSample s = smooth_curves(make_raw(grid, values), BasisSpec::bspline(19, 0.0, 1.0), 1e-8);
  const Matrix fine = evaluate(s, linspace(0.0, 1.0, 301), true);
  EXPECT_LT((fine.array() - 5.0).abs().maxCoeff(), 1e-8);
}

TEST(SmoothCurves, InterpolatesWhenSquare) {
  const auto grid = linspace(0.0, 1.0, 8);
  std::mt19937_64 rng(2);
  const Matrix values = random_matrix(4, 8, rng);
  const FunctionalSample s = smooth_curves(make_raw(grid, values), BasisSpec::bspline(8, 0.0, 1.0), 0.0);
  EXPECT_LT((evaluate(s, grid, true) - values).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SmoothCurves, RidgeMonotoneAndMatchesAugmentedLeastSquares) {
  const auto grid = linspace(0.0, 1.0, 21);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 0.2);
  Matrix values(1, 21);
  for (int j = 0; j < 21; ++j)
    values(0, j) = std::sin(2 * std::numbers::pi * grid[static_cast<std::size_t>(j)]) + nd(rng);
  const BasisSpec basis = BasisSpec::bspline(12, 0.0, 1.0);
  const Matrix b = eval_basis(basis, grid);
  const Matrix d = difference_operator(12, 2);
  double prev_rss = -1.0;
  for (double pen : {0.0, 1e-4, 1e-2, 1.0, 100.0}) {
    const FunctionalSample s = smooth_curves(make_raw(grid, values), basis, pen);
    // Oracle: QR least squares on the stacked system [B; sqrt(pen) D].
    Matrix aug(21 + d.rows(), 12);
    aug << b, std::sqrt(pen) * d;
    Vector rhs = Vector::Zero(aug.rows());
    rhs.head(21) = values.row(0).transpose();
    const Vector c = aug.colPivHouseholderQr().solve(rhs);
    EXPECT_LT((s.coefficients.row(0).transpose() - c).norm(), 1e-8 * (1.0 + c.norm()));
    const double rss = (values.row(0).transpose() - b * c).squaredNorm();
    EXPECT_GE(rss, prev_rss - 1e-12);
    prev_rss = rss;
  }
}

TEST(SmoothCurves, LinearInValues) {
  const auto grid = linspace(0.0, 1.0, 21);
  std::mt19937_64 rng(4);
  const Matrix values = random_matrix(5, 21, rng);
  const BasisSpec basis = BasisSpec::bspline(19, 0.0, 1.0);
  const FunctionalSample a = smooth_curves(make_raw(grid, values), basis, 1e-3);
  const FunctionalSample b = smooth_curves(make_raw(grid, -3.5 * values), basis, 1e-3);
  EXPECT_LT((b.coefficients + 3.5 * a.coefficients).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SmoothCurves, TooFewGridPointsIsNumericalError) {
  const auto grid = linspace(0.0, 1.0, 5);
  EXPECT_THROW(smooth_curves(make_raw(grid, Matrix::Ones(2, 5)), BasisSpec::bspline(10, 0.0, 1.0), 0.0),
               NumericalError);
}

TEST(SmoothCurves, RejectsMissingValues) {
  const auto grid = linspace(0.0, 1.0, 8);
  Matrix values = Matrix::Ones(2, 8);
  values(1, 3) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(smooth_curves(make_raw(grid, values), BasisSpec::bspline(6, 0.0, 1.0), 0.0), DataError);
}

TEST(SmoothCurves, ExactInsideSpan) {
  const BasisSpec basis = BasisSpec::bspline(9, 0.0, 1.0);
  const auto grid = linspace(0.0, 1.0, 21);
  std::mt19937_64 rng(5);
  const Matrix c = random_matrix(3, 9, rng);
  const Matrix values = c * eval_basis(basis, grid).transpose();
  const FunctionalSample s = smooth_curves(make_raw(grid, values), basis, 0.0);
  const auto fine = linspace(0.0, 1.0, 97);
  EXPECT_LT((evaluate(s, fine, true) - c * eval_basis(basis, fine).transpose()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Center, ColumnMeansZero) {
  const FunctionalSample c = center(random_sample(30, 7, 6));
  EXPECT_LT(c.coefficients.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Center, Idempotent) {
  const FunctionalSample once = center(random_sample(30, 7, 7));
  const FunctionalSample twice = center(once);
  EXPECT_LT((twice.coefficients - once.coefficients).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((twice.mean_coefficients - once.mean_coefficients).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Center, AlreadyCenteredHasZeroMean) {
  FunctionalSample s = random_sample(20, 6, 8);
  s.coefficients.rowwise() -= s.coefficients.colwise().mean();
  const FunctionalSample c = center(s);
  EXPECT_LT(c.mean_coefficients.cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((c.coefficients - s.coefficients).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Center, TranslationInvariant) {
  const FunctionalSample s = random_sample(20, 6, 9);
  FunctionalSample shifted = s;
  Vector shift = Vector::LinSpaced(6, -1.0, 2.0);
  shifted.coefficients.rowwise() += shift.transpose();
  const FunctionalSample a = center(s), b = center(shifted);
  EXPECT_LT((b.coefficients - a.coefficients).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((b.mean_coefficients - a.mean_coefficients - shift).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Center, NeedsTwoCurves) { EXPECT_THROW(center(random_sample(1, 6, 10)), ParameterError); }

TEST(Evaluate, CenteredColumnMeansZero) {
  const FunctionalSample c = center(random_sample(25, 8, 11));
  const Matrix v = evaluate(c, linspace(0.0, 1.0, 41), false);
  EXPECT_LT(v.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Evaluate, IncludeMeanRestoresCurves) {
  const FunctionalSample s = random_sample(10, 8, 12);
  const auto pts = linspace(0.0, 1.0, 17);
  EXPECT_LT((evaluate(center(s), pts, true) - evaluate(s, pts, true)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Evaluate, ResmoothRoundTrip) {
  const FunctionalSample s = random_sample(6, 10, 13);
  const auto fine = linspace(0.0, 1.0, 201);
  const Matrix v = evaluate(s, fine, true);
  const FunctionalSample back = smooth_curves(make_raw(fine, v), s.basis, 0.0);
  EXPECT_LT((back.coefficients - s.coefficients).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Evaluate, OutsideDomain) {
  const FunctionalSample s = random_sample(3, 6, 14);
  EXPECT_THROW(evaluate(s, std::vector<double>{0.5, 1.5}, false), DomainError);
}
