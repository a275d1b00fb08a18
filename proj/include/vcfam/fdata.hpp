#ifndef VCFAM_FDATA_HPP
#define VCFAM_FDATA_HPP

#include <string>
#include <vector>

#include "basis.hpp"
#include "errors.hpp"
#include "numkit.hpp"

namespace vcfam {

/// Curves observed on one shared grid: values is n x r.
struct RawCurves {
  std::vector<double> grid;
  Matrix values;

  void validate() const {
    if (static_cast<Eigen::Index>(grid.size()) != values.cols())
      throw ShapeError("raw curves: grid has " + std::to_string(grid.size()) + " points but values have " +
                       std::to_string(values.cols()) + " columns");
    for (std::size_t j = 1; j < grid.size(); ++j)
      if (!(grid[j] > grid[j - 1]))
        throw DataError("raw curves: grid must be strictly increasing");
    if (!values.allFinite())
      throw DataError("raw curves: missing or non-finite values");
  }
};

/// n curves as basis-coefficient rows. The represented curve i is
/// coefficients.row(i) + mean_coefficients.
struct FunctionalSample {
  BasisSpec basis;
  Matrix coefficients;      // n x K
  Vector mean_coefficients; // length K

  Eigen::Index size() const { return coefficients.rows(); }
};

/// Default predictor smoothing level (near-interpolation).
inline constexpr double default_curve_penalty = 1e-8;

/// B-spline basis used for ingesting curves observed on `grid`.
inline BasisSpec default_curve_basis(const std::vector<double>& grid) {
  if (grid.size() < 6)
    throw DataError("need at least 6 grid points per curve, got " + std::to_string(grid.size()));
  const int dim = std::min(static_cast<int>(grid.size()) - 2, 40);
  return BasisSpec::bspline(dim, grid.front(), grid.back());
}

/// Penalized least-squares smoothing of every row:
/// c_i = argmin |x_i - B c|^2 + penalty * c'Pc with a second-order difference P.
inline FunctionalSample smooth_curves(const RawCurves& raw, const BasisSpec& basis, double smooth_penalty) {
  raw.validate();
  if (!(smooth_penalty >= 0.0))
    throw ParameterError("smooth_curves: penalty must be >= 0");
  const Matrix b = eval_basis(basis, raw.grid);
  Matrix normal = b.transpose() * b;
  if (smooth_penalty > 0.0)
    normal += smooth_penalty * penalty_for(basis, 2).matrix;
  Eigen::LLT<Matrix> llt;
  try {
    llt = spd_factor(normal, "smooth_curves");
  } catch (const SingularError& e) {
    throw NumericalError(std::string("smooth_curves: basis not identifiable from the grid (too few grid points?): ") +
                         e.what());
  }
  FunctionalSample out;
  out.basis = basis;
  out.coefficients = llt.solve(b.transpose() * raw.values.transpose()).transpose();
  out.mean_coefficients = Vector::Zero(basis.dimension);
  return out;
}

/// Subtracts the coefficient column means; the removed mean accumulates in
/// mean_coefficients so the represented curves are unchanged.
inline FunctionalSample center(const FunctionalSample& sample) {
  if (sample.size() < 2)
    throw ParameterError("center: need at least two curves");
  FunctionalSample out = sample;
  const Eigen::RowVectorXd mean = sample.coefficients.colwise().mean();
  out.coefficients.rowwise() -= mean;
  out.mean_coefficients = sample.mean_coefficients + mean.transpose();
  return out;
}

/// n x |points| curve values; include_mean adds the stored mean function back.
inline Matrix evaluate(const FunctionalSample& sample, std::span<const double> points, bool include_mean) {
  const Matrix b = eval_basis(sample.basis, points);
  Matrix out = sample.coefficients * b.transpose();
  if (include_mean)
    out.rowwise() += (b * sample.mean_coefficients).transpose();
  return out;
}

inline Matrix evaluate(const FunctionalSample& sample, const std::vector<double>& points, bool include_mean) {
  return evaluate(sample, std::span<const double>(points), include_mean);
}

/// Rows [first, first + count) of a sample, sharing basis and mean.
inline FunctionalSample subset(const FunctionalSample& sample, Eigen::Index first, Eigen::Index count) {
  FunctionalSample out;
  out.basis = sample.basis;
  out.coefficients = sample.coefficients.middleRows(first, count);
  out.mean_coefficients = sample.mean_coefficients;
  return out;
}

} // namespace vcfam

#endif
