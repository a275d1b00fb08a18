#ifndef VCFAM_CLI_HPP
#define VCFAM_CLI_HPP

// Commands behind the vcfam executable. Each takes a plain options struct,
// writes its files atomically and returns a report; argument parsing lives
// in tools/vcfam.cpp.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "io.hpp"
#include "model.hpp"
#include "pipeline.hpp"
#include "sim.hpp"
#include "vcfam.hpp"

namespace vcfam {

namespace fs = std::filesystem;

/// Parses "1e-6..1e1" (every decade from lo to hi) or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& text) {
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const double lo = parse_double(text.substr(0, dots), "grid");
    const double hi = parse_double(text.substr(dots + 2), "grid");
    if (!(lo > 0.0) || !(hi >= lo))
      throw ParameterError("grid '" + text + "': need 0 < lo <= hi");
    const double elo = std::log10(lo), ehi = std::log10(hi);
    if (std::abs(elo - std::round(elo)) > 1e-9 || std::abs(ehi - std::round(ehi)) > 1e-9)
      throw ParameterError("grid '" + text + "': range endpoints must be powers of ten");
    return decade_grid(static_cast<int>(std::lround(elo)), static_cast<int>(std::lround(ehi)));
  }
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_double(item, "grid"));
  if (out.empty())
    throw ParameterError("grid '" + text + "' is empty");
  for (double v : out)
    if (!(v > 0.0) || !std::isfinite(v))
      throw ParameterError("grid values must be positive and finite");
  return out;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// t-basis domain: explicit bounds where given, otherwise the observed range.
inline TDomain t_domain_for(const Vector& t, bool periodic, std::optional<double> lo, std::optional<double> hi) {
  if (t.size() == 0 && (!lo || !hi))
    throw DataError("cannot infer the t range from an empty sample");
  TDomain d;
  d.periodic = periodic;
  d.lo = lo ? *lo : t.minCoeff();
  d.hi = hi ? *hi : t.maxCoeff();
  if (!(d.lo < d.hi))
    throw DataError("t range is degenerate (lo=" + format_double(d.lo) + ", hi=" + format_double(d.hi) +
                    "); pass --t-lo/--t-hi");
  return d;
}

/// Which smoothing-parameter slot of each kind follows lambda_zeta / lambda_t.
enum class LambdaSlot { zeta, t };

inline std::vector<LambdaSlot> lambda_slots(ModelKind kind) {
  switch (kind) {
  case ModelKind::vcfam:
  case ModelKind::fam1: return {LambdaSlot::zeta, LambdaSlot::t};
  case ModelKind::vcflm: return {LambdaSlot::t};
  case ModelKind::fam2:
  case ModelKind::flm: return {LambdaSlot::zeta};
  }
  return {};
}

struct TuningOptions {
  std::vector<double> grid = decade_grid(-6, 1);
  std::optional<double> lambda_zeta; // fixes that slot instead of searching
  std::optional<double> lambda_t;

  std::vector<std::vector<double>> grids(ModelKind kind) const {
    std::vector<std::vector<double>> out;
    for (LambdaSlot s : lambda_slots(kind)) {
      const auto& fixed = s == LambdaSlot::zeta ? lambda_zeta : lambda_t;
      out.push_back(fixed ? std::vector<double>{*fixed} : grid);
    }
    return out;
  }
};

// ---- simulate ---------------------------------------------------------------

struct SimulateOptions {
  SimConfig sim;
  fs::path out_dir = ".";
};

struct SimulateReport {
  fs::path predictors, response, truth;
  SimDataset data;
};

inline std::string predictors_csv(const std::vector<std::string>& ids, const RawCurves& raw) {
  CsvWriter w;
  w.field("id");
  for (double s : raw.grid)
    w.field(s);
  w.end();
  for (Eigen::Index i = 0; i < raw.values.rows(); ++i) {
    w.field(ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < raw.values.cols(); ++j)
      w.field(raw.values(i, j));
    w.end();
  }
  return w.str();
}

inline SimulateReport cmd_simulate(const SimulateOptions& options) {
  if (!fs::is_directory(options.out_dir))
    throw IoError("output directory '" + options.out_dir.string() + "' does not exist");
  SimulateReport out;
  out.data = generate(options.sim);
  const SimDataset& d = out.data;
  const auto n = d.y.size();
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < n; ++i)
    ids.push_back(std::to_string(i + 1));

  out.predictors = options.out_dir / "predictors.csv";
  out.response = options.out_dir / "response.csv";
  out.truth = options.out_dir / "truth.csv";
  write_atomic(out.predictors, predictors_csv(ids, d.raw));

  CsvWriter resp;
  resp.field("id").field("y").field("t").end();
  for (Eigen::Index i = 0; i < n; ++i)
    resp.field(ids[static_cast<std::size_t>(i)]).field(d.y(i)).field(d.t(i)).end();
  resp.save(out.response);

  CsvWriter truth;
  truth.field("id").field("g");
  for (Eigen::Index k = 0; k < d.zeta_true.cols(); ++k)
    truth.field("zeta_" + std::to_string(k + 1));
  truth.end();
  for (Eigen::Index i = 0; i < n; ++i) {
    truth.field(ids[static_cast<std::size_t>(i)]).field(d.g(i));
    for (Eigen::Index k = 0; k < d.zeta_true.cols(); ++k)
      truth.field(d.zeta_true(i, k));
    truth.end();
  }
  truth.save(out.truth);
  return out;
}

/// Latent signal g by id from a truth CSV, aligned to `ids`.
inline Vector read_truth(const fs::path& path, const std::vector<std::string>& ids) {
  const auto rows = read_csv(path);
  if (rows.empty())
    throw DataError("'" + path.string() + "': missing header row");
  const auto& h = rows.front();
  const auto id_col = std::find(h.begin(), h.end(), "id") - h.begin();
  const auto g_col = std::find(h.begin(), h.end(), "g") - h.begin();
  if (id_col == static_cast<long>(h.size()) || g_col == static_cast<long>(h.size()))
    throw DataError("'" + path.string() + "': needs columns id and g");
  std::map<std::string, double> g;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != h.size())
      throw DataError("'" + path.string() + "' row " + std::to_string(i + 1) + ": wrong number of fields");
    g[rows[i][static_cast<std::size_t>(id_col)]] = parse_double(rows[i][static_cast<std::size_t>(g_col)], path.string());
  }
  Vector out(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = g.find(ids[i]);
    if (it == g.end())
      throw DataError("id '" + ids[i] + "' missing from truth file");
    out(static_cast<Eigen::Index>(i)) = it->second;
  }
  return out;
}

// ---- fit ----------------------------------------------------------------------

struct FitOptions {
  fs::path predictors, response;
  std::optional<fs::path> truth;   // latent signal, reports MSE when given
  std::optional<fs::path> out;     // model artifact
  std::optional<fs::path> fitted;  // id,t,y,y_hat
  std::optional<fs::path> aic_table;
  ModelKind kind = ModelKind::vcfam;
  VcfamConfig config;
  TuningOptions tuning;
  PreprocessOptions preprocess;
  bool t_periodic = false;
  std::optional<double> t_lo, t_hi;
  std::uint64_t seed = 0; // provenance only; fitting is deterministic
};

struct FitReport {
  Dataset data;
  ModelFit fit;
  ModelArtifact artifact;
  Vector variance_explained;
  double mse = std::numeric_limits<double>::quiet_NaN();
  std::string text;
};

inline std::string aic_table_csv(const GridSearch& search, ModelKind kind) {
  CsvWriter w;
  for (LambdaSlot s : lambda_slots(kind))
    w.field(s == LambdaSlot::zeta ? "lambda_zeta" : "lambda_t");
  w.field("ok").field("df").field("aic").end();
  for (const auto& p : search.points) {
    for (double l : p.lambdas)
      w.field(l);
    w.field(p.ok ? 1 : 0).field(p.df).field(p.aic).end();
  }
  return w.str();
}

inline std::string describe_fit(const FitReport& r) {
  const Model& m = r.fit.model;
  std::ostringstream os;
  os << "model: " << to_string(m.kind) << "  n=" << r.data.size() << "  q=" << m.q() << "\n";
  os << "variance explained:";
  double acc = 0.0;
  for (Eigen::Index k = 0; k < r.variance_explained.size(); ++k) {
    acc += r.variance_explained(k);
    char buf[64];
    std::snprintf(buf, sizeof buf, " %.4f", r.variance_explained(k));
    os << buf;
  }
  char buf[256];
  std::snprintf(buf, sizeof buf, "  (cumulative %.4f)\n", acc);
  os << buf;
  os << "lambda:";
  const auto slots = lambda_slots(m.kind);
  for (std::size_t j = 0; j < m.lambdas.size(); ++j)
  {
    std::snprintf(buf, sizeof buf, "%s%.6g", slots[j] == LambdaSlot::zeta ? " zeta=" : " t=", m.lambdas[j]);
    os << buf;
  }
  os << "\n";
  std::snprintf(buf, sizeof buf, "df=%.6g  AIC=%.10g  sigma2=%.6g", m.df, m.aic, m.sigma.variance);
  os << buf;
  if (m.sigma.structure == SigmaStructure::ar1) {
    std::snprintf(buf, sizeof buf, "  rho=%.6g", m.sigma.rho);
    os << buf;
  }
  os << "\n";
  if (std::isfinite(r.mse)) {
    std::snprintf(buf, sizeof buf, "MSE vs truth=%.10g  (x10: %.6g)\n", r.mse, 10.0 * r.mse);
    os << buf;
  }
  const auto& pts = r.fit.search.points;
  if (pts.size() > 1) {
    os << "AIC grid (" << pts.size() << " points):\n";
    for (const auto& p : pts) {
      os << " ";
      for (double l : p.lambdas) {
        std::snprintf(buf, sizeof buf, " %8.0e", l);
        os << buf;
      }
      if (p.ok)
        std::snprintf(buf, sizeof buf, "  df=%9.4f  AIC=%12.4f%s\n", p.df, p.aic,
                      &p == &pts[r.fit.search.best] ? "  *" : "");
      else
        std::snprintf(buf, sizeof buf, "  failed: %.150s\n", p.message.c_str());
      os << buf;
    }
  }
  return os.str();
}

inline FitReport cmd_fit(const FitOptions& options) {
  FitReport r;
  r.data = load_dataset(options.predictors, options.response, true);
  if (r.data.size() < 3)
    throw DataError("fit: need at least 3 observations, got " + std::to_string(r.data.size()));
  const BasisSpec curve_basis = default_curve_basis(r.data.raw.grid);
  const Preprocessed pre = preprocess(r.data.raw, curve_basis, options.preprocess);
  TrainingSet train{pre.fpca, r.data.t, r.data.y, t_domain_for(r.data.t, options.t_periodic, options.t_lo, options.t_hi)};
  r.fit = fit_model(options.kind, train, options.config, options.tuning.grids(options.kind));
  r.variance_explained = pre.fpca.eigenvalues / pre.fpca.spectrum.sum();
  if (options.truth)
    r.mse = mse(read_truth(*options.truth, r.data.ids), r.fit.fitted);

  r.artifact.model = r.fit.model;
  r.artifact.curve_grid = r.data.raw.grid;
  r.artifact.curve_penalty = options.preprocess.curve_penalty;
  r.artifact.t_domain = train.t_domain;
  r.artifact.seed = options.seed;
  r.artifact.created = utc_timestamp();
  if (options.out)
    save_artifact(r.artifact, *options.out);
  if (options.fitted) {
    CsvWriter w;
    w.field("id").field("t").field("y").field("y_hat").end();
    for (Eigen::Index i = 0; i < r.data.size(); ++i)
      w.field(r.data.ids[static_cast<std::size_t>(i)]).field(r.data.t(i)).field(r.data.y(i)).field(r.fit.fitted(i)).end();
    w.save(*options.fitted);
  }
  if (options.aic_table)
    write_atomic(*options.aic_table, aic_table_csv(r.fit.search, options.kind));
  r.text = describe_fit(r);
  return r;
}

// ---- predict ------------------------------------------------------------------

/// Predictions for raw curves observed on the artifact's grid.
inline Vector predict_raw(const ModelArtifact& a, const RawCurves& raw, const Vector& t) {
  if (raw.grid.size() != a.curve_grid.size())
    throw DataError("predict: new curves have " + std::to_string(raw.grid.size()) + " grid points, the model was fitted on " +
                    std::to_string(a.curve_grid.size()));
  for (std::size_t j = 0; j < raw.grid.size(); ++j)
    if (std::abs(raw.grid[j] - a.curve_grid[j]) > 1e-12 * std::max(1.0, std::abs(a.curve_grid[j])))
      throw DataError("predict: grid point " + std::to_string(j + 1) + " (" + format_double(raw.grid[j]) +
                      ") differs from the training grid (" + format_double(a.curve_grid[j]) + ")");
  const FunctionalSample curves = smooth_curves(raw, a.model.fpca.basis, a.curve_penalty);
  return predict(a.model, curves, t);
}

struct PredictOptions {
  fs::path model, predictors, response; // response needs id and t; y is ignored
  fs::path out;
};

struct PredictReport {
  std::vector<std::string> ids;
  Vector t;
  Vector y_hat;
};

inline PredictReport cmd_predict(const PredictOptions& options) {
  const ModelArtifact a = load_artifact(options.model);
  const Dataset d = load_dataset(options.predictors, options.response, false);
  PredictReport r;
  r.ids = d.ids;
  r.t = d.t;
  r.y_hat = d.size() == 0 ? Vector() : predict_raw(a, d.raw, d.t);
  CsvWriter w;
  w.field("id").field("t").field("y_hat").end();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    w.field(r.ids[static_cast<std::size_t>(i)]).field(r.t(i)).field(r.y_hat(i)).end();
  w.save(options.out);
  return r;
}

// ---- bench --------------------------------------------------------------------

struct BenchOptions {
  int reps = 100;
  std::vector<int> ns{500, 1000};
  std::vector<double> sigmas{0.05, 0.1};
  std::vector<ModelKind> models{std::begin(all_model_kinds), std::end(all_model_kinds)};
  std::uint64_t seed = 1;
  TDesign t_design = TDesign::uniform;
  VcfamConfig config;
  PreprocessOptions preprocess;
  std::vector<double> grid = decade_grid(-6, 1);
  std::optional<fs::path> out;   // CSV
  std::optional<fs::path> table; // text
};

struct BenchReport {
  std::vector<BenchmarkRow> rows; // n-major, then sigma, then model
  std::string csv;
  std::string text;
};

inline std::string bench_text(const std::vector<BenchmarkRow>& rows, const std::vector<ModelKind>& models) {
  std::ostringstream os;
  char buf[64];
  os << "Averaged MSE (x10), standard deviation (x10^2) in parentheses\n";
  std::snprintf(buf, sizeof buf, "%-14s", "");
  os << buf;
  for (ModelKind k : models) {
    std::string name = to_string(k);
    for (auto& c : name)
      c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    std::snprintf(buf, sizeof buf, "%10s", name.c_str());
    os << buf;
  }
  os << "\n";
  const std::size_t nm = models.size();
  for (std::size_t start = 0; start < rows.size(); start += nm) {
    const BenchmarkRow& head = rows[start];
    if (start == 0 || rows[start - nm].n != head.n)
      os << "n=" << head.n << "\n";
    std::snprintf(buf, sizeof buf, "  sigma=%-6g", head.sigma);
    os << buf;
    for (std::size_t m = 0; m < nm; ++m) {
      std::snprintf(buf, sizeof buf, "%10.3f", rows[start + m].mean_mse_x10);
      os << buf;
    }
    os << "\n";
    std::snprintf(buf, sizeof buf, "%-14s", "");
    os << buf;
    for (std::size_t m = 0; m < nm; ++m) {
      std::snprintf(buf, sizeof buf, "(%.3f)", rows[start + m].sd_x102);
      std::string cell = buf;
      std::snprintf(buf, sizeof buf, "%10s", cell.c_str());
      os << buf;
    }
    os << "\n";
  }
  int failures = 0;
  for (const auto& r : rows)
    failures += r.failures;
  if (failures > 0)
    os << "failed replications: " << failures << "\n";
  return os.str();
}

inline BenchReport cmd_bench(const BenchOptions& options) {
  if (options.ns.empty() || options.sigmas.empty() || options.models.empty())
    throw ParameterError("bench: n list, sigma list and model list must be nonempty");
  BenchmarkOptions bo;
  bo.reps = options.reps;
  bo.models = options.models;
  bo.config = options.config;
  bo.preprocess = options.preprocess;
  bo.grid = options.grid;
  BenchReport r;
  for (int n : options.ns)
    for (double sigma : options.sigmas) {
      SimConfig sc;
      sc.n = n;
      sc.sigma = sigma;
      sc.seed = options.seed;
      sc.t_design = options.t_design;
      const BenchmarkTable table = replicate_benchmark(sc, bo);
      r.rows.insert(r.rows.end(), table.rows.begin(), table.rows.end());
    }
  CsvWriter w;
  w.field("model").field("n").field("sigma").field("mean_mse_x10").field("sd_x102").field("reps").field("failures").end();
  for (const auto& row : r.rows)
    w.field(to_string(row.model)).field(row.n).field(row.sigma).field(row.mean_mse_x10).field(row.sd_x102).field(row.reps)
        .field(row.failures)
        .end();
  r.csv = w.str();
  r.text = bench_text(r.rows, options.models);
  if (options.out)
    write_atomic(*options.out, r.csv);
  if (options.table)
    write_atomic(*options.table, r.text);
  return r;
}

// ---- rolling ------------------------------------------------------------------

/// Forward moving average: y'_i = mean(y_i, ..., y_{i+w-1}), truncated at the
/// end of the series.
inline Vector forward_moving_average(const Vector& y, int window) {
  if (window < 1)
    throw ParameterError("moving average window must be >= 1");
  const Eigen::Index n = y.size();
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index len = std::min<Eigen::Index>(window, n - i);
    out(i) = y.segment(i, len).mean();
  }
  return out;
}

struct RollingOptions {
  fs::path predictors, response;
  std::optional<fs::path> out;
  int i0_start = 550;
  int horizon = 7;
  ModelKind kind = ModelKind::vcfam;
  VcfamConfig config;
  TuningOptions tuning;
  PreprocessOptions preprocess;
  bool freeze_fpca = false;
  int smooth_response_ma = 0; // 0: off
  bool t_periodic = false;
  std::optional<double> t_lo, t_hi;
};

struct RollingStep {
  int i0 = 0; // 1-based size of the training window
  double t = 0.0;
  double y_true = 0.0;
  double y_hat = std::numeric_limits<double>::quiet_NaN();
  double y_null = 0.0; // training mean
  std::string error;
};

struct RollingReport {
  std::vector<RollingStep> steps;
  int failures = 0;
  double mse = std::numeric_limits<double>::quiet_NaN();
  double mae = std::numeric_limits<double>::quiet_NaN();
  double null_mse = std::numeric_limits<double>::quiet_NaN();
  std::string text;
};

/// Expanding-window forecasts on data already in memory: for each i0, refit on
/// observations 1..i0 and predict observation i0 + horizon.
inline RollingReport rolling_forecast(const Dataset& data, const RollingOptions& options) {
  if (options.horizon < 1)
    throw ParameterError("rolling: horizon must be >= 1 (horizon 0 would predict a response the training window already "
                         "contains)");
  if (options.i0_start < 3)
    throw ParameterError("rolling: i0_start must be >= 3");
  const Eigen::Index n = data.size();
  if (!(n > options.i0_start + options.horizon - 1))
    throw ParameterError("rolling: need n >= i0_start + horizon (n=" + std::to_string(n) +
                         ", i0_start=" + std::to_string(options.i0_start) + ", horizon=" + std::to_string(options.horizon) +
                         ")");
  Vector y = data.y;
  if (options.smooth_response_ma > 0)
    y = forward_moving_average(y, options.smooth_response_ma);
  const TDomain domain = t_domain_for(data.t, options.t_periodic, options.t_lo, options.t_hi);
  const FunctionalSample curves = smooth_curves(data.raw, default_curve_basis(data.raw.grid), options.preprocess.curve_penalty);

  std::optional<FpcaModel> frozen;
  if (options.freeze_fpca)
    frozen = fpca_for(subset(curves, 0, options.i0_start), options.preprocess);

  RollingReport r;
  double se = 0.0, ae = 0.0, null_se = 0.0;
  int ok = 0;
  const auto grids = options.tuning.grids(options.kind);
  for (int i0 = options.i0_start; i0 + options.horizon <= n; ++i0) {
    RollingStep step;
    step.i0 = i0;
    const Eigen::Index target = i0 + options.horizon - 1;
    step.t = data.t(target);
    step.y_true = y(target);
    step.y_null = y.head(i0).mean();
    try {
      const FunctionalSample train_curves = subset(curves, 0, i0);
      TrainingSet train;
      train.fpca = frozen ? *frozen : fpca_for(train_curves, options.preprocess);
      if (frozen)
        train.fpca.scores = project_scores(train.fpca, train_curves);
      train.t = data.t.head(i0);
      train.y = y.head(i0);
      train.t_domain = domain;
      const ModelFit fit = fit_model(options.kind, train, options.config, grids);
      const Matrix scores = project_scores(fit.model.fpca, subset(curves, target, 1));
      step.y_hat = predict_from_scores(fit.model, scores, data.t.segment(target, 1))(0);
      const double e = step.y_hat - step.y_true;
      se += e * e;
      ae += std::abs(e);
      null_se += (step.y_null - step.y_true) * (step.y_null - step.y_true);
      ++ok;
    } catch (const Error& e) {
      step.error = e.what();
      ++r.failures;
    }
    r.steps.push_back(std::move(step));
  }
  if (ok > 0) {
    r.mse = se / ok;
    r.mae = ae / ok;
    r.null_mse = null_se / ok;
  }
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "steps=%zu  failures=%d  MSE=%.10g  MAE=%.10g  null MSE=%.10g\n", r.steps.size(),
                r.failures, r.mse, r.mae, r.null_mse);
  os << buf;
  r.text = os.str();
  return r;
}

inline RollingReport cmd_rolling(const RollingOptions& options) {
  const Dataset data = load_dataset(options.predictors, options.response, true);
  RollingReport r = rolling_forecast(data, options);
  if (options.out) {
    CsvWriter w;
    w.field("i0").field("t").field("y_true").field("y_hat").field("y_null").field("error").end();
    for (const auto& s : r.steps)
      w.field(s.i0).field(s.t).field(s.y_true).field(s.y_hat).field(s.y_null).field(s.error).end();
    w.save(*options.out);
  }
  return r;
}

// ---- surface ------------------------------------------------------------------

struct SurfaceOptions {
  fs::path model;
  int k = 1;
  int n_zeta = 41;
  int n_t = 41;
  bool centered = false;
  std::optional<fs::path> out;
};

struct SurfaceReport {
  std::vector<double> zeta, t;
  Matrix values; // n_zeta x n_t
  std::string csv;
};

inline SurfaceReport surface_report(const Model& model, const SurfaceOptions& options) {
  if (options.n_zeta < 2 || options.n_t < 2)
    throw ParameterError("surface: grid sizes must be >= 2");
  SurfaceReport r;
  r.zeta = linspace(model.zeta_basis.lo, model.zeta_basis.hi, options.n_zeta);
  r.t = linspace(model.t_basis.lo, model.t_basis.hi, options.n_t);
  r.values = surface(model, options.k, r.zeta, r.t, options.centered);
  CsvWriter w;
  w.field("zeta").field("t").field("value").end();
  for (std::size_t a = 0; a < r.zeta.size(); ++a)
    for (std::size_t b = 0; b < r.t.size(); ++b)
      w.field(r.zeta[a]).field(r.t[b]).field(r.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))).end();
  r.csv = w.str();
  return r;
}

inline SurfaceReport cmd_surface(const SurfaceOptions& options) {
  const ModelArtifact a = load_artifact(options.model);
  SurfaceReport r = surface_report(a.model, options);
  if (options.out)
    write_atomic(*options.out, r.csv);
  return r;
}

} // namespace vcfam

#endif
