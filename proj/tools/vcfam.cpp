// vcfam command-line front end.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <vcfam/cli.hpp>

namespace {

using namespace vcfam;

int report_error(int code, const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j{{"error", kind}, {"exit_code", code}, {"message", message}};
  std::cerr << j.dump() << "\n";
  return code;
}

const char* kind_name(ErrorKind k) {
  switch (k) {
  case ErrorKind::usage: return "usage";
  case ErrorKind::data: return "data";
  case ErrorKind::numerical: return "numerical";
  }
  return "error";
}

template <class T>
std::optional<T> opt(CLI::Option* o, const T& v) {
  return o->count() > 0 ? std::optional<T>(v) : std::nullopt;
}

std::vector<ModelKind> parse_models(const std::string& text) {
  std::vector<ModelKind> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(model_kind_from_string(item));
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const double v = parse_double(item, "list");
    out.push_back(static_cast<T>(v));
  }
  return out;
}

// Options shared by fit and rolling.
struct ModelFlags {
  std::string model = "vcfam";
  std::string grid = "1e-6..1e1";
  double lambda_zeta = 0.0, lambda_t = 0.0;
  CLI::Option* lz = nullptr;
  CLI::Option* lt = nullptr;
  int q = 0;
  double threshold = 0.99;
  double curve_penalty = default_curve_penalty;
  std::string sigma = "iid";
  VcfamConfig config;
  bool t_periodic = false;
  double t_lo = 0.0, t_hi = 1.0;
  CLI::Option* tlo = nullptr;
  CLI::Option* thi = nullptr;

  void add(CLI::App* app) {
    app->add_option("--model", model, "Model kind: vcfam, vcflm, fam1, fam2, flm")->capture_default_str();
    app->add_option("--m1", config.m1, "zeta-direction B-spline dimension")->capture_default_str();
    app->add_option("--m2", config.m2, "t-direction B-spline dimension")->capture_default_str();
    app->add_option("--grid", grid, "Smoothing-parameter grid: LO..HI by decade, or a comma list")->capture_default_str();
    lz = app->add_option("--lambda-zeta", lambda_zeta, "Fix the zeta (or additive-term) smoothing parameter");
    lt = app->add_option("--lambda-t", lambda_t, "Fix the t smoothing parameter");
    app->add_option("--q", q, "Number of principal components (0: variance rule)")->capture_default_str();
    app->add_option("--variance-threshold", threshold, "Cumulative variance for choosing q")->capture_default_str();
    app->add_option("--curve-penalty", curve_penalty, "Roughness penalty when smoothing predictor curves")
        ->capture_default_str();
    app->add_option("--sigma-structure", sigma, "Error covariance: iid or ar1")->capture_default_str();
    app->add_option("--max-gls-iterations", config.max_gls_iterations)->capture_default_str();
    app->add_option("--gls-tolerance", config.gls_tolerance)->capture_default_str();
    app->add_flag("--t-periodic", t_periodic, "Periodic B-spline basis in t");
    tlo = app->add_option("--t-lo", t_lo, "Lower end of the t domain (default: smallest observed t)");
    thi = app->add_option("--t-hi", t_hi, "Upper end of the t domain (default: largest observed t)");
  }

  ModelKind kind() const { return model_kind_from_string(model); }

  TuningOptions tuning() const {
    TuningOptions t;
    t.grid = parse_grid(grid);
    t.lambda_zeta = opt(lz, lambda_zeta);
    t.lambda_t = opt(lt, lambda_t);
    return t;
  }

  PreprocessOptions preprocess() const {
    PreprocessOptions p;
    p.curve_penalty = curve_penalty;
    p.variance_threshold = threshold;
    p.fixed_q = q;
    return p;
  }

  VcfamConfig vcfam_config() const {
    VcfamConfig c = config;
    c.sigma_structure = sigma_structure_from_string(sigma);
    return c;
  }
};

TDesign t_design_from_string(const std::string& s) {
  if (s == "uniform") return TDesign::uniform;
  if (s == "index") return TDesign::time_index;
  throw ParameterError("unknown t design '" + s + "' (expected uniform or index)");
}

// Flat "key = value" config lines become --key=value arguments unless the
// same flag was given on the command line, so flags > file > defaults.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty())
    return args;
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config file '" + path + "'");
  auto given = [&](const std::string& key) {
    for (const auto& a : args)
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0)
        return true;
    return false;
  };
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::string line;
  int lineno = 0;
  std::vector<std::string> extra;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParameterError("config '" + path + "' line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "config" || given(key))
      continue;
    if (value == "true")
      extra.push_back("--" + key);
    else if (value != "false")
      extra.push_back("--" + key + "=" + value);
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

int run(int argc, char** argv) {
  CLI::App app{"Varying-coefficient functional additive models"};
  app.set_version_flag("--version", std::string(tool_version));
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a simulated dataset");
  SimulateOptions sim_opts;
  std::string sim_design = "uniform";
  sim->add_option("--n", sim_opts.sim.n)->capture_default_str();
  sim->add_option("--sigma", sim_opts.sim.sigma, "Noise sd as a fraction of the signal range")->capture_default_str();
  sim->add_option("--seed", sim_opts.sim.seed)->capture_default_str();
  sim->add_option("--t-design", sim_design, "uniform (t ~ U[0,1]) or index (t_i = i/n)")->capture_default_str();
  sim->add_option("--out-dir", sim_opts.out_dir, "Directory for predictors.csv, response.csv, truth.csv")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Fit and tune a model");
  FitOptions fit_opts;
  ModelFlags fit_flags;
  std::string fit_truth, fit_out, fit_fitted, fit_aic;
  fit->add_option("--predictors", fit_opts.predictors)->required();
  fit->add_option("--response", fit_opts.response)->required();
  auto* fit_truth_o = fit->add_option("--truth", fit_truth, "Latent-signal CSV (id, g); reports MSE");
  auto* fit_out_o = fit->add_option("--out", fit_out, "Model artifact (JSON)");
  auto* fit_fitted_o = fit->add_option("--fitted", fit_fitted, "Fitted values CSV");
  auto* fit_aic_o = fit->add_option("--aic-table", fit_aic, "AIC grid CSV");
  fit->add_option("--seed", fit_opts.seed, "Recorded in the artifact provenance");
  fit_flags.add(fit);

  // predict
  auto* pred = app.add_subcommand("predict", "Predict from a saved model");
  PredictOptions pred_opts;
  pred->add_option("--model", pred_opts.model)->required();
  pred->add_option("--predictors", pred_opts.predictors)->required();
  pred->add_option("--response", pred_opts.response, "CSV with id and t")->required();
  pred->add_option("--out", pred_opts.out)->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Simulation benchmark over the five model kinds");
  BenchOptions bench_opts;
  std::string bench_n = "500,1000", bench_sigma = "0.05,0.1", bench_models = "vcfam,vcflm,fam1,fam2,flm";
  std::string bench_out, bench_table, bench_grid = "1e-6..1e1", bench_design = "uniform";
  bench->add_option("--reps", bench_opts.reps)->capture_default_str();
  bench->add_option("--n", bench_n, "Comma-separated sample sizes")->capture_default_str();
  bench->add_option("--sigma", bench_sigma, "Comma-separated noise levels")->capture_default_str();
  bench->add_option("--models", bench_models)->capture_default_str();
  bench->add_option("--seed", bench_opts.seed)->capture_default_str();
  bench->add_option("--grid", bench_grid)->capture_default_str();
  bench->add_option("--t-design", bench_design)->capture_default_str();
  auto* bench_out_o = bench->add_option("--out", bench_out, "CSV output");
  auto* bench_table_o = bench->add_option("--table", bench_table, "Text table output");

  // rolling
  auto* roll = app.add_subcommand("rolling", "Expanding-window forecast evaluation");
  RollingOptions roll_opts;
  ModelFlags roll_flags;
  std::string roll_out;
  roll->add_option("--predictors", roll_opts.predictors)->required();
  roll->add_option("--response", roll_opts.response)->required();
  auto* roll_out_o = roll->add_option("--out", roll_out, "Forecast CSV");
  roll->add_option("--i0-start", roll_opts.i0_start)->capture_default_str();
  roll->add_option("--horizon", roll_opts.horizon)->capture_default_str();
  roll->add_flag("--freeze-fpca", roll_opts.freeze_fpca, "Fit FPCA once on the first window");
  roll->add_option("--smooth-response-ma", roll_opts.smooth_response_ma,
                   "Replace y by its forward moving average over this many observations")
      ->capture_default_str();
  roll_flags.add(roll);

  // surface
  auto* surf = app.add_subcommand("surface", "Export an estimated component surface");
  SurfaceOptions surf_opts;
  std::string surf_out;
  surf->add_option("--model", surf_opts.model)->required();
  surf->add_option("--k", surf_opts.k, "Component (1-based)")->capture_default_str();
  surf->add_option("--n-zeta", surf_opts.n_zeta)->capture_default_str();
  surf->add_option("--n-t", surf_opts.n_t)->capture_default_str();
  surf->add_flag("--centered", surf_opts.centered, "Remove the zeta-mean at each t");
  surf->add_option("--out", surf_out)->required();

  for (auto* sub : {sim, fit, pred, bench, roll, surf})
    sub->add_option("--config", "key = value file; command-line flags take precedence");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(2, "usage", e.what());
  }

  if (sim->parsed()) {
    sim_opts.sim.t_design = t_design_from_string(sim_design);
    const SimulateReport r = cmd_simulate(sim_opts);
    std::cout << "wrote " << r.predictors.string() << ", " << r.response.string() << ", " << r.truth.string() << "\n";
  } else if (fit->parsed()) {
    fit_opts.kind = fit_flags.kind();
    fit_opts.config = fit_flags.vcfam_config();
    fit_opts.tuning = fit_flags.tuning();
    fit_opts.preprocess = fit_flags.preprocess();
    fit_opts.t_periodic = fit_flags.t_periodic;
    fit_opts.t_lo = opt(fit_flags.tlo, fit_flags.t_lo);
    fit_opts.t_hi = opt(fit_flags.thi, fit_flags.t_hi);
    if (fit_truth_o->count()) fit_opts.truth = fit_truth;
    if (fit_out_o->count()) fit_opts.out = fit_out;
    if (fit_fitted_o->count()) fit_opts.fitted = fit_fitted;
    if (fit_aic_o->count()) fit_opts.aic_table = fit_aic;
    std::cout << cmd_fit(fit_opts).text;
  } else if (pred->parsed()) {
    const PredictReport r = cmd_predict(pred_opts);
    std::cout << "wrote " << r.y_hat.size() << " predictions to " << pred_opts.out.string() << "\n";
  } else if (bench->parsed()) {
    bench_opts.ns = parse_list<int>(bench_n);
    bench_opts.sigmas = parse_list<double>(bench_sigma);
    bench_opts.models = parse_models(bench_models);
    bench_opts.grid = parse_grid(bench_grid);
    bench_opts.t_design = t_design_from_string(bench_design);
    if (bench_out_o->count()) bench_opts.out = bench_out;
    if (bench_table_o->count()) bench_opts.table = bench_table;
    std::cout << cmd_bench(bench_opts).text;
  } else if (roll->parsed()) {
    roll_opts.kind = roll_flags.kind();
    roll_opts.config = roll_flags.vcfam_config();
    roll_opts.tuning = roll_flags.tuning();
    roll_opts.preprocess = roll_flags.preprocess();
    roll_opts.t_periodic = roll_flags.t_periodic;
    roll_opts.t_lo = opt(roll_flags.tlo, roll_flags.t_lo);
    roll_opts.t_hi = opt(roll_flags.thi, roll_flags.t_hi);
    if (roll_out_o->count()) roll_opts.out = roll_out;
    std::cout << cmd_rolling(roll_opts).text;
  } else if (surf->parsed()) {
    surf_opts.out = surf_out;
    cmd_surface(surf_opts);
    std::cout << "wrote " << surf_out << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const vcfam::Error& e) {
    const int code = static_cast<int>(e.kind());
    return report_error(code, kind_name(e.kind()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error(3, "data", e.what());
  } catch (const std::bad_alloc&) {
    return report_error(4, "numerical", "out of memory");
  } catch (const std::exception& e) {
    return report_error(4, "numerical", e.what());
  }
}
