#ifndef VCFAM_BASIS_HPP
#define VCFAM_BASIS_HPP

// Basis systems used throughout: clamped B-splines (curve smoothing, zeta and
// t directions), periodic cubic B-splines (optional seasonal t direction) and
// the Fourier system used for simulated eigenfunctions. Also hosts the
// difference penalties and the normal CDF behind the score transform.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numkit.hpp"

namespace vcfam {

enum class BasisKind { fourier, bspline, periodic_bspline };

inline std::string to_string(BasisKind kind) {
  switch (kind) {
  case BasisKind::fourier: return "fourier";
  case BasisKind::bspline: return "bspline";
  case BasisKind::periodic_bspline: return "periodic_bspline";
  }
  return "unknown";
}

inline BasisKind basis_kind_from_string(const std::string& s) {
  if (s == "fourier") return BasisKind::fourier;
  if (s == "bspline") return BasisKind::bspline;
  if (s == "periodic_bspline") return BasisKind::periodic_bspline;
  throw ParameterError("unknown basis kind '" + s + "'");
}

struct BasisSpec {
  BasisKind kind = BasisKind::bspline;
  int dimension = 0;
  double lo = 0.0;
  double hi = 1.0;
  int degree = 3;                    // bspline only
  std::vector<double> interior_knots; // bspline only, strictly increasing

  /// Clamped B-spline with equally spaced interior knots.
  static BasisSpec bspline(int dimension, double lo, double hi, int degree = 3) {
    BasisSpec spec;
    spec.kind = BasisKind::bspline;
    spec.dimension = dimension;
    spec.lo = lo;
    spec.hi = hi;
    spec.degree = degree;
    const int n_interior = dimension - degree - 1;
    if (n_interior < 0)
      throw ParameterError("bspline: dimension " + std::to_string(dimension) + " too small for degree " +
                           std::to_string(degree));
    for (int j = 1; j <= n_interior; ++j)
      spec.interior_knots.push_back(lo + (hi - lo) * j / (n_interior + 1));
    spec.validate();
    return spec;
  }

  static BasisSpec fourier(int dimension, double lo, double hi) {
    BasisSpec spec;
    spec.kind = BasisKind::fourier;
    spec.dimension = dimension;
    spec.lo = lo;
    spec.hi = hi;
    spec.degree = 0;
    spec.validate();
    return spec;
  }

  /// Cubic B-splines wrapped on [lo, hi) with `dimension` equally spaced knots.
  static BasisSpec periodic_bspline(int dimension, double lo, double hi) {
    BasisSpec spec;
    spec.kind = BasisKind::periodic_bspline;
    spec.dimension = dimension;
    spec.lo = lo;
    spec.hi = hi;
    spec.degree = 3;
    spec.validate();
    return spec;
  }

  void validate() const {
    if (dimension < 2)
      throw ParameterError("basis dimension must be >= 2");
    if (!(lo < hi))
      throw ParameterError("basis domain must satisfy lo < hi");
    if (kind == BasisKind::bspline) {
      if (degree < 0)
        throw ParameterError("bspline degree must be >= 0");
      if (static_cast<int>(interior_knots.size()) + degree + 1 != dimension)
        throw ParameterError("bspline dimension must equal interior knots + degree + 1");
      for (std::size_t j = 0; j < interior_knots.size(); ++j) {
        const double prev = j == 0 ? lo : interior_knots[j - 1];
        if (!(interior_knots[j] > prev))
          throw ParameterError("bspline interior knots must be strictly increasing inside the domain");
      }
      if (!interior_knots.empty() && !(interior_knots.back() < hi))
        throw ParameterError("bspline interior knots must lie inside the domain");
    }
    if (kind == BasisKind::periodic_bspline && dimension < 4)
      throw ParameterError("periodic cubic bspline needs dimension >= 4");
  }

  /// Full knot vector including the (degree+1)-fold boundary knots.
  std::vector<double> knot_vector() const {
    std::vector<double> knots(static_cast<std::size_t>(degree + 1), lo);
    knots.insert(knots.end(), interior_knots.begin(), interior_knots.end());
    knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), hi);
    return knots;
  }

  /// Breakpoints delimiting the polynomial pieces.
  std::vector<double> breakpoints() const {
    std::vector<double> out{lo};
    if (kind == BasisKind::bspline) {
      out.insert(out.end(), interior_knots.begin(), interior_knots.end());
    } else if (kind == BasisKind::periodic_bspline) {
      for (int j = 1; j < dimension; ++j)
        out.push_back(lo + (hi - lo) * j / dimension);
    }
    out.push_back(hi);
    return out;
  }

  friend bool operator==(const BasisSpec&, const BasisSpec&) = default;
};

namespace detail {

inline double clamp_to_domain(const BasisSpec& spec, double x, std::size_t index, double slack = 1e-12) {
  if (!std::isfinite(x) || x < spec.lo - slack || x > spec.hi + slack)
    throw DomainError("point " + std::to_string(x) + " outside basis domain [" + std::to_string(spec.lo) + ", " +
                          std::to_string(spec.hi) + "]",
                      index);
  return std::clamp(x, spec.lo, spec.hi);
}

// Nonzero B-spline values at x (de Boor / Cox recursion); writes degree+1
// values for basis indices span-degree .. span.
inline int bspline_nonzero(const std::vector<double>& knots, int degree, int n_basis, double x, double* values) {
  // Span index s with knots[s] <= x < knots[s+1]; the right endpoint belongs to the last span.
  int span;
  if (x >= knots[static_cast<std::size_t>(n_basis)]) {
    span = n_basis - 1;
  } else {
    auto it = std::upper_bound(knots.begin() + degree, knots.begin() + n_basis + 1, x);
    span = static_cast<int>(it - knots.begin()) - 1;
  }
  std::vector<double> left(static_cast<std::size_t>(degree + 1)), right(static_cast<std::size_t>(degree + 1));
  values[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[j] = x - knots[static_cast<std::size_t>(span + 1 - j)];
    right[j] = knots[static_cast<std::size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = values[r] / (right[r + 1] + left[j - r]);
      values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    values[j] = saved;
  }
  return span - degree;
}

// Cardinal cubic B-spline supported on [0, 4].
inline double cardinal_cubic(double u) {
  if (u <= 0.0 || u >= 4.0) return 0.0;
  if (u < 1.0) return u * u * u / 6.0;
  if (u < 2.0) {
    const double v = u - 1.0;
    return (1.0 + 3.0 * v + 3.0 * v * v - 3.0 * v * v * v) / 6.0;
  }
  if (u < 3.0) {
    const double v = 3.0 - u;
    return (1.0 + 3.0 * v + 3.0 * v * v - 3.0 * v * v * v) / 6.0;
  }
  const double v = 4.0 - u;
  return v * v * v / 6.0;
}

} // namespace detail

/// Evaluates every basis function at every point; rows follow `points`.
/// Points within 1e-12 of the domain are clamped onto it, anything further
/// away raises DomainError carrying the offending index.
inline Matrix eval_basis(const BasisSpec& spec, std::span<const double> points) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(points.size());
  Matrix out = Matrix::Zero(n, spec.dimension);
  const double width = spec.hi - spec.lo;
  switch (spec.kind) {
  case BasisKind::bspline: {
    const auto knots = spec.knot_vector();
    std::vector<double> vals(static_cast<std::size_t>(spec.degree + 1));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = detail::clamp_to_domain(spec, points[static_cast<std::size_t>(i)], static_cast<std::size_t>(i));
      const int first = detail::bspline_nonzero(knots, spec.degree, spec.dimension, x, vals.data());
      for (int r = 0; r <= spec.degree; ++r)
        out(i, first + r) = vals[static_cast<std::size_t>(r)];
    }
    break;
  }
  case BasisKind::periodic_bspline: {
    const int m = spec.dimension;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = detail::clamp_to_domain(spec, points[static_cast<std::size_t>(i)], static_cast<std::size_t>(i));
      double u = (x - spec.lo) / width * m;
      if (u >= m) u -= m;
      for (int j = 0; j < m; ++j) {
        // basis j is centred at knot j; wrap the offset into [0, m)
        double offset = u - j + 2.0;
        offset -= m * std::floor(offset / m);
        out(i, j) = detail::cardinal_cubic(offset) + detail::cardinal_cubic(offset + m);
      }
    }
    break;
  }
  case BasisKind::fourier: {
    const double two_pi = 2.0 * std::numbers::pi;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = detail::clamp_to_domain(spec, points[static_cast<std::size_t>(i)], static_cast<std::size_t>(i));
      const double u = (x - spec.lo) / width;
      out(i, 0) = 1.0;
      for (int c = 1; c < spec.dimension; ++c) {
        const int j = (c + 1) / 2;
        out(i, c) = (c % 2 == 1) ? std::numbers::sqrt2 * std::sin(two_pi * j * u)
                                 : std::numbers::sqrt2 * std::cos(two_pi * j * u);
      }
    }
    break;
  }
  }
  return out;
}

inline Matrix eval_basis(const BasisSpec& spec, const std::vector<double>& points) {
  return eval_basis(spec, std::span<const double>(points));
}

inline Matrix eval_basis(const BasisSpec& spec, const Vector& points) {
  return eval_basis(spec, std::span<const double>(points.data(), static_cast<std::size_t>(points.size())));
}

struct PenaltyMatrix {
  int order = 0;
  Matrix matrix;
};

/// Order-th difference operator D, (m - order) x m.
inline Matrix difference_operator(int m, int order) {
  if (order < 1 || m <= order)
    throw ParameterError("difference penalty needs m > order >= 1 (m=" + std::to_string(m) +
                         ", order=" + std::to_string(order) + ")");
  Matrix d = Matrix::Identity(m, m);
  for (int r = 0; r < order; ++r) {
    const Eigen::Index rows = d.rows() - 1;
    d = (d.bottomRows(rows) - d.topRows(rows)).eval();
  }
  return d;
}

/// P = D'D for the order-th difference operator; rank m - order.
inline PenaltyMatrix difference_penalty(int m, int order) {
  const Matrix d = difference_operator(m, order);
  return {order, d.transpose() * d};
}

/// Wrapped (circulant) difference penalty for periodic bases; null space is
/// the constants only.
inline PenaltyMatrix circulant_difference_penalty(int m, int order) {
  if (order < 1 || m <= order)
    throw ParameterError("circulant difference penalty needs m > order >= 1");
  Matrix d = Matrix::Identity(m, m);
  for (int r = 0; r < order; ++r) {
    Matrix shifted(m, m);
    for (int i = 0; i < m; ++i)
      shifted.row(i) = d.row((i + 1) % m);
    d = (shifted - d).eval();
  }
  return {order, d.transpose() * d};
}

/// Smoothness penalty matching a basis: circulant for periodic splines,
/// ordinary differences otherwise.
inline PenaltyMatrix penalty_for(const BasisSpec& spec, int order = 2) {
  if (spec.kind == BasisKind::periodic_bspline)
    return circulant_difference_penalty(spec.dimension, order);
  return difference_penalty(spec.dimension, order);
}

/// Normal CDF with the given mean and variance.
inline double gaussian_cdf(double x, double mean, double variance) {
  if (!(variance > 0.0))
    throw ParameterError("gaussian_cdf: variance must be positive");
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

} // namespace vcfam

#endif
