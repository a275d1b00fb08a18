#ifndef VCFAM_SIM_HPP
#define VCFAM_SIM_HPP

// Simulation design and replication harness.
//
// Predictor: x_i(s) = mu(s) + sum_{k<=20} xi_ik phi_k(s) + e, mu(s) = s + sin(s),
// xi_ik ~ N(0, 45.25 * 0.64^k), phi_k the mean-zero Fourier functions on [0,1],
// e ~ N(0, 0.2) (variance) on r = 21 equally spaced points.
// Response: y_i = g_i + eps_i, g_i = f1 + f2 + f3 evaluated at
// (zeta_ik = Phi(xi_ik; 0, lambda_k), t_i), eps ~ N(0, (sigma * range(g))^2).
//
// Random stream: std::mt19937_64(seed); normals by inverse CDF from 53-bit
// uniforms. Draw order: xi (row-major n x q), e (row-major n x r), t, eps.

#include <boost/math/special_functions/erf.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "basis.hpp"
#include "errors.hpp"
#include "fdata.hpp"
#include "model.hpp"
#include "pipeline.hpp"

namespace vcfam {

enum class TDesign { uniform, time_index };

struct SimConfig {
  int n = 500;
  double sigma = 0.05;
  int q_true = 20;
  int r = 21;
  std::uint64_t seed = 1;
  TDesign t_design = TDesign::uniform; // time_index: t_i = i / n
  double noise_variance = 0.2;

  void validate() const {
    if (n < 50)
      throw ParameterError("simulation: n must be >= 50");
    if (!(sigma > 0.0))
      throw ParameterError("simulation: sigma must be positive");
    if (q_true < 3)
      throw ParameterError("simulation: q_true must be >= 3");
    if (r < 6)
      throw ParameterError("simulation: r must be >= 6");
    if (!(noise_variance >= 0.0))
      throw ParameterError("simulation: noise variance must be >= 0");
  }
};

struct SimDataset {
  RawCurves raw;
  Vector y;
  Vector t;
  Vector g;
  Matrix zeta_true; // n x q_true
  Matrix xi_true;   // n x q_true
  Vector eigenvalues;
};

/// lambda_k = 45.25 * 0.64^k, k = 1..q.
inline Vector sim_eigenvalues(int q) {
  Vector out(q);
  for (int k = 1; k <= q; ++k)
    out(k - 1) = 45.25 * std::pow(0.64, k);
  return out;
}

inline double sim_mean_function(double s) { return s + std::sin(s); }

/// True component functions; zero beyond the third.
inline double true_f(int k, double zeta, double t) {
  if (k < 1 || k > 20)
    throw ParameterError("true_f: component " + std::to_string(k) + " out of range 1..20");
  switch (k) {
  case 1: return std::cos(std::numbers::pi * (zeta + t));
  case 2: return std::sin(2.0 * std::numbers::pi * (zeta + t - 0.5));
  case 3: return zeta * zeta - 1.0 / 3.0;
  default: return 0.0;
  }
}

/// Normal variates by inverse CDF over a 64-bit Mersenne Twister.
class NormalStream {
public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double standard_normal() { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * uniform()); }

private:
  std::mt19937_64 engine_;
};

inline SimDataset generate(const SimConfig& config) {
  config.validate();
  const int n = config.n, q = config.q_true, r = config.r;
  NormalStream rng(config.seed);
  SimDataset out;
  out.eigenvalues = sim_eigenvalues(q);

  out.xi_true.resize(n, q);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < q; ++k)
      out.xi_true(i, k) = std::sqrt(out.eigenvalues(k)) * rng.standard_normal();

  out.raw.grid.resize(static_cast<std::size_t>(r));
  for (int tau = 0; tau < r; ++tau)
    out.raw.grid[static_cast<std::size_t>(tau)] = static_cast<double>(tau) / (r - 1);
  const Matrix fourier = eval_basis(BasisSpec::fourier(q + 1, 0.0, 1.0), out.raw.grid);
  const Matrix phi = fourier.rightCols(q); // drop the constant column
  Vector mu(r);
  for (int tau = 0; tau < r; ++tau)
    mu(tau) = sim_mean_function(out.raw.grid[static_cast<std::size_t>(tau)]);
  out.raw.values = out.xi_true * phi.transpose();
  out.raw.values.rowwise() += mu.transpose();
  const double noise_sd = std::sqrt(config.noise_variance);
  for (int i = 0; i < n; ++i)
    for (int tau = 0; tau < r; ++tau)
      out.raw.values(i, tau) += noise_sd * rng.standard_normal();

  out.t.resize(n);
  for (int i = 0; i < n; ++i)
    out.t(i) = config.t_design == TDesign::uniform ? rng.uniform() : static_cast<double>(i + 1) / n;

  out.zeta_true.resize(n, q);
  for (int k = 0; k < q; ++k)
    for (int i = 0; i < n; ++i)
      out.zeta_true(i, k) = gaussian_cdf(out.xi_true(i, k), 0.0, out.eigenvalues(k));

  out.g.resize(n);
  for (int i = 0; i < n; ++i) {
    double g = 0.0;
    for (int k = 1; k <= 3; ++k)
      g += true_f(k, out.zeta_true(i, k - 1), out.t(i));
    out.g(i) = g;
  }
  const double range = out.g.maxCoeff() - out.g.minCoeff();
  const double eps_sd = config.sigma * range;
  out.y.resize(n);
  for (int i = 0; i < n; ++i)
    out.y(i) = out.g(i) + eps_sd * rng.standard_normal();
  return out;
}

/// Mean squared deviation of predictions from the latent signal.
inline double mse(const Vector& g, const Vector& y_hat) {
  if (g.size() != y_hat.size())
    throw ShapeError("mse: length mismatch (" + std::to_string(g.size()) + " vs " + std::to_string(y_hat.size()) + ")");
  if (g.size() == 0)
    throw ParameterError("mse: empty input");
  return (g - y_hat).squaredNorm() / static_cast<double>(g.size());
}

/// Curve basis used for simulated predictors.
inline BasisSpec sim_curve_basis(const SimDataset& data) { return default_curve_basis(data.raw.grid); }

inline TrainingSet sim_training_set(const SimDataset& data, const FpcaModel& fpca) {
  return {fpca, data.t, data.y, TDomain{0.0, 1.0, false}};
}

struct BenchmarkOptions {
  int reps = 100;
  std::vector<ModelKind> models{std::begin(all_model_kinds), std::end(all_model_kinds)};
  VcfamConfig config;
  PreprocessOptions preprocess;
  std::vector<double> grid = decade_grid(-6, 1);
};

struct BenchmarkRow {
  ModelKind model = ModelKind::vcfam;
  int n = 0;
  double sigma = 0.0;
  double mean_mse_x10 = 0.0;
  double sd_x102 = 0.0;
  int reps = 0;
  int failures = 0;
  std::vector<double> mse; // per successful rep, in rep order
  std::vector<std::string> errors;
  double seconds = 0.0;
};

struct BenchmarkTable {
  std::vector<BenchmarkRow> rows;
};

/// One simulated replicate: generate -> smooth -> FPCA -> each model -> MSE vs g.
struct ReplicateResult {
  std::vector<double> mse;       // per model, NaN on failure
  std::vector<std::string> error; // per model, empty on success
  std::vector<double> seconds;
};

inline ReplicateResult run_replicate(const SimConfig& config, const BenchmarkOptions& options) {
  ReplicateResult out;
  const auto nm = options.models.size();
  out.mse.assign(nm, std::numeric_limits<double>::quiet_NaN());
  out.error.assign(nm, "");
  out.seconds.assign(nm, 0.0);
  SimDataset data;
  FpcaModel fpca;
  try {
    data = generate(config);
    fpca = preprocess(data.raw, sim_curve_basis(data), options.preprocess).fpca;
  } catch (const Error& e) {
    out.error.assign(nm, std::string("preprocessing: ") + e.what());
    return out;
  }
  const TrainingSet train = sim_training_set(data, fpca);
  for (std::size_t m = 0; m < nm; ++m) {
    const auto start = std::chrono::steady_clock::now();
    try {
      const ModelKind kind = options.models[m];
      const std::vector<std::vector<double>> grids(lambda_count(kind), options.grid);
      const ModelFit fit = fit_model(kind, train, options.config, grids);
      out.mse[m] = mse(data.g, fit.fitted);
    } catch (const Error& e) {
      out.error[m] = e.what();
    }
    out.seconds[m] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return out;
}

/// Replicates with seeds config.seed + rep and aggregates as MSE x10 (mean) and x10^2 (sd)
/// (mean MSE x 10, standard deviation x 10^2).
inline BenchmarkTable replicate_benchmark(const SimConfig& config, const BenchmarkOptions& options) {
  if (options.reps < 1)
    throw ParameterError("benchmark: reps must be >= 1");
  BenchmarkTable table;
  for (ModelKind kind : options.models) {
    BenchmarkRow row;
    row.model = kind;
    row.n = config.n;
    row.sigma = config.sigma;
    row.reps = options.reps;
    table.rows.push_back(row);
  }
  for (int rep = 0; rep < options.reps; ++rep) {
    SimConfig rc = config;
    rc.seed = config.seed + static_cast<std::uint64_t>(rep);
    const ReplicateResult res = run_replicate(rc, options);
    for (std::size_t m = 0; m < options.models.size(); ++m) {
      auto& row = table.rows[m];
      row.seconds += res.seconds[m];
      if (res.error[m].empty()) {
        row.mse.push_back(res.mse[m]);
      } else {
        ++row.failures;
        row.errors.push_back("rep " + std::to_string(rep) + ": " + res.error[m]);
      }
    }
  }
  for (auto& row : table.rows) {
    const auto k = static_cast<double>(row.mse.size());
    if (row.mse.empty()) {
      row.mean_mse_x10 = row.sd_x102 = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const Vector v = to_vector(row.mse);
    const double mean = v.mean();
    const double var = row.mse.size() > 1 ? (v.array() - mean).square().sum() / (k - 1.0) : 0.0;
    row.mean_mse_x10 = 10.0 * mean;
    row.sd_x102 = 100.0 * std::sqrt(var);
  }
  return table;
}

} // namespace vcfam

#endif
