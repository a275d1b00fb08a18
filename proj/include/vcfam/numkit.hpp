#ifndef VCFAM_NUMKIT_HPP
#define VCFAM_NUMKIT_HPP

// Dense linear-algebra kernel: Kronecker products, symmetric eigensolver,
// SPD solves and traces. Thin wrappers over Eigen with the contracts the
// estimators rely on (descending eigenvalues, pivot-reporting Cholesky).

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "errors.hpp"

namespace vcfam {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SymEig {
  Vector values;  // descending
  Matrix vectors; // column j pairs with values(j)
};

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

inline Matrix kron(const Matrix& a, const Matrix& b) {
  if (a.size() == 0 || b.size() == 0)
    throw ShapeError("kron: empty operand");
  constexpr auto limit = static_cast<double>(std::numeric_limits<Eigen::Index>::max());
  const double rows = static_cast<double>(a.rows()) * static_cast<double>(b.rows());
  const double cols = static_cast<double>(a.cols()) * static_cast<double>(b.cols());
  if (rows > limit || cols > limit || rows * cols > limit)
    throw ShapeError("kron: result dimensions overflow");
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline double trace(const Matrix& a) {
  if (a.rows() != a.cols())
    throw ShapeError("trace: matrix is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  return a.trace();
}

inline SymEig sym_eig(const Matrix& a) {
  if (a.rows() != a.cols())
    throw ShapeError("sym_eig: matrix not square");
  if (!a.allFinite())
    throw ParameterError("sym_eig: non-finite entries");
  const double asym = a.size() == 0 ? 0.0 : (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10)
    throw ParameterError("sym_eig: matrix not symmetric (max asymmetry " + std::to_string(asym) + ")");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success)
    throw NumericalError("sym_eig: eigensolver did not converge");
  // Eigen returns ascending order.
  SymEig out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

// Unblocked Cholesky used only to locate the failing pivot once Eigen's
// factorization has reported a numerical issue.
inline std::size_t first_bad_pivot(const Matrix& a) {
  const Eigen::Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0))
      return static_cast<std::size_t>(j);
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
  }
  return static_cast<std::size_t>(n);
}

// Cholesky factor of a symmetric positive definite matrix. Throws
// SingularError with the pivot index when the matrix is not PD.
inline Eigen::LLT<Matrix> spd_factor(const Matrix& a, const std::string& context = "solve_spd") {
  if (a.rows() != a.cols())
    throw ShapeError(context + ": matrix not square");
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success)
    throw SingularError(context + ": matrix is not positive definite", first_bad_pivot(a));
  const Vector diag = llt.matrixLLT().diagonal();
  if (!diag.allFinite())
    throw SingularError(context + ": non-finite Cholesky factor", first_bad_pivot(a));
  // LLT happily factors matrices with pivots at round-off level; a pivot that
  // lost all but ~13 digits of its diagonal entry is treated as singular.
  for (Eigen::Index j = 0; j < diag.size(); ++j)
    if (diag(j) * diag(j) <= 1e-13 * a(j, j))
      throw SingularError(context + ": matrix is numerically singular", static_cast<std::size_t>(j));
  return llt;
}

inline Matrix solve_spd(const Matrix& a, const Matrix& b) {
  if (b.rows() != a.rows())
    throw ShapeError("solve_spd: right-hand side has " + std::to_string(b.rows()) + " rows, expected " +
                     std::to_string(a.rows()));
  return spd_factor(a).solve(b);
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

} // namespace vcfam

#endif
