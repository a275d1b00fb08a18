#ifndef VCFAM_TESTS_SUPPORT_HPP
#define VCFAM_TESTS_SUPPORT_HPP

// Independent oracles shared by the test suites. Nothing here calls into the
// estimation code paths it is used to check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <vcfam/numkit.hpp>

namespace vcfam::testing {

/// Kolmogorov-Smirnov distance of a sample to Uniform[0,1].
inline double ks_uniform(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - x[i]);
    d = std::max(d, x[i] - static_cast<double>(i) / n);
  }
  return d;
}

/// Least squares by brute-force normal equations (LDLT of X'X).
inline Vector ols(const Matrix& x, const Vector& y) {
  const Matrix g = x.transpose() * x;
  return g.ldlt().solve(x.transpose() * y);
}

/// Helmert contrasts: m x (m-1), columns orthogonal to the ones vector.
inline Matrix helmert(int m) {
  Matrix h = Matrix::Zero(m, m - 1);
  for (int j = 0; j < m - 1; ++j) {
    for (int i = 0; i <= j; ++i)
      h(i, j) = 1.0;
    h(j + 1, j) = -(j + 1.0);
  }
  return h;
}

inline double correlation(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      m(i, j) = nd(rng);
  return m;
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng) { return random_matrix(n, 1, rng).col(0); }

inline double rel_diff(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("vcfam_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace vcfam::testing

#endif
