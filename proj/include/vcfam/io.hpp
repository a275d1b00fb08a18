#ifndef VCFAM_IO_HPP
#define VCFAM_IO_HPP

// CSV ingestion/emission and the JSON model artifact.
//
// Predictor CSV: header = grid points (optionally preceded by an "id" column),
// one curve per row. Response CSV: named columns id, y, t (y optional for
// prediction inputs). Numbers are written with 17 significant digits.

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <unistd.h>
#include <vector>

#include "errors.hpp"
#include "fdata.hpp"
#include "fpca.hpp"
#include "model.hpp"

namespace vcfam {

inline constexpr int artifact_format_version = 1;
inline constexpr const char* tool_version = "vcfam 1.0.0";

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(ErrorKind::data, what) {}
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& field, const std::string& context) {
  std::size_t b = field.find_first_not_of(" \t");
  std::size_t e = field.find_last_not_of(" \t\r");
  if (b == std::string::npos)
    throw DataError(context + ": empty numeric field");
  double v = 0.0;
  const char* first = field.data() + b;
  const char* last = field.data() + e + 1;
  if (*first == '+')
    ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw DataError(context + ": cannot parse '" + field + "' as a number");
  return v;
}

namespace detail {

/// Splits one record; returns false on a stray quote.
inline bool split_record(const std::string& record, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < record.size(); ++i) {
    const char c = record[i];
    if (quoted) {
      if (c != '"')
        field += c;
      else if (i + 1 < record.size() && record[i + 1] == '"')
        field += record[++i];
      else
        quoted = false;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '"') {
      if (was_quoted || !field.empty())
        return false;
      quoted = was_quoted = true;
    } else {
      if (was_quoted)
        return false;
      field += c;
    }
  }
  if (quoted)
    return false;
  fields.push_back(std::move(field));
  return true;
}

} // namespace detail

/// RFC-4180 records (quoted fields, doubled quotes). Blank lines are skipped.
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> fields;
  std::string line, record;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    record += line;
    // A record continues while it holds an odd number of quotes.
    if (std::count(record.begin(), record.end(), '"') % 2 == 1) {
      record += '\n';
      continue;
    }
    if (record.find_first_not_of(" \t") != std::string::npos) {
      if (!detail::split_record(record, fields))
        throw DataError("'" + path.string() + "' record " + std::to_string(rows.size() + 1) + ": malformed quoting");
      rows.push_back(fields);
    }
    record.clear();
  }
  if (!record.empty())
    throw DataError("'" + path.string() + "': unterminated quoted field");
  return rows;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + '"';
}

/// Writes `content` to a sibling temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path() && !fs::exists(path.parent_path()))
    throw IoError("output directory '" + path.parent_path().string() + "' does not exist");
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out)
      throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into '" + path.string() + "'");
  }
}

class CsvWriter {
public:
  CsvWriter& field(const std::string& s) {
    sep();
    out_ << csv_field(s);
    return *this;
  }
  CsvWriter& field(double v) {
    sep();
    out_ << format_double(v);
    return *this;
  }
  CsvWriter& field(long long v) {
    sep();
    out_ << v;
    return *this;
  }
  CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
  CsvWriter& end() {
    out_ << '\n';
    first_ = true;
    return *this;
  }
  std::string str() const { return out_.str(); }
  void save(const std::filesystem::path& path) const { write_atomic(path, out_.str()); }

private:
  void sep() {
    if (!first_)
      out_ << ',';
    first_ = false;
  }
  std::ostringstream out_;
  bool first_ = true;
};

struct PredictorTable {
  std::vector<std::string> ids;
  RawCurves raw;
};

inline PredictorTable read_predictors(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  const std::string ctx = "'" + path.string() + "'";
  if (rows.empty())
    throw DataError(ctx + ": missing header row of grid points");
  const auto& header = rows.front();
  const bool has_id = !header.empty() && header.front() == "id";
  const std::size_t first = has_id ? 1 : 0;
  if (header.size() <= first)
    throw DataError(ctx + ": header has no grid points");
  PredictorTable out;
  for (std::size_t j = first; j < header.size(); ++j)
    out.raw.grid.push_back(parse_double(header[j], ctx + " header column " + std::to_string(j + 1)));
  for (std::size_t j = 1; j < out.raw.grid.size(); ++j)
    if (!(out.raw.grid[j] > out.raw.grid[j - 1]))
      throw DataError(ctx + ": grid points must be strictly increasing");
  const auto n = static_cast<Eigen::Index>(rows.size() - 1);
  const auto r = static_cast<Eigen::Index>(out.raw.grid.size());
  out.raw.values.resize(n, r);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i + 1)];
    const std::string rctx = ctx + " row " + std::to_string(i + 2);
    if (row.size() != header.size())
      throw DataError(rctx + ": expected " + std::to_string(header.size()) + " fields, got " + std::to_string(row.size()));
    out.ids.push_back(has_id ? row.front() : std::to_string(i + 1));
    for (Eigen::Index j = 0; j < r; ++j)
      out.raw.values(i, j) = parse_double(row[first + static_cast<std::size_t>(j)], rctx);
  }
  return out;
}

struct ResponseTable {
  std::vector<std::string> ids;
  Vector y; // empty when the file has no y column
  Vector t;
};

inline ResponseTable read_response(const std::filesystem::path& path, bool require_y) {
  const auto rows = read_csv(path);
  const std::string ctx = "'" + path.string() + "'";
  if (rows.empty())
    throw DataError(ctx + ": missing header row");
  std::map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < rows.front().size(); ++j)
    col[rows.front()[j]] = j;
  if (!col.contains("t"))
    throw DataError(ctx + ": missing column 't'");
  if (require_y && !col.contains("y"))
    throw DataError(ctx + ": missing column 'y'");
  const bool has_y = col.contains("y");
  const auto n = static_cast<Eigen::Index>(rows.size() - 1);
  ResponseTable out;
  out.t.resize(n);
  if (has_y)
    out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i + 1)];
    const std::string rctx = ctx + " row " + std::to_string(i + 2);
    if (row.size() != rows.front().size())
      throw DataError(rctx + ": expected " + std::to_string(rows.front().size()) + " fields, got " +
                      std::to_string(row.size()));
    out.ids.push_back(col.contains("id") ? row[col["id"]] : std::to_string(i + 1));
    out.t(i) = parse_double(row[col["t"]], rctx);
    if (has_y)
      out.y(i) = parse_double(row[col["y"]], rctx);
  }
  return out;
}

/// Curves with their responses, rows in predictor-file order.
struct Dataset {
  std::vector<std::string> ids;
  RawCurves raw;
  Vector y;
  Vector t;

  Eigen::Index size() const { return static_cast<Eigen::Index>(ids.size()); }
};

inline Dataset load_dataset(const std::filesystem::path& predictors, const std::filesystem::path& response,
                            bool require_y = true) {
  PredictorTable p = read_predictors(predictors);
  ResponseTable r = read_response(response, require_y);
  if (p.ids.size() != r.ids.size())
    throw DataError("predictor file has " + std::to_string(p.ids.size()) + " rows but response file has " +
                    std::to_string(r.ids.size()));
  std::map<std::string, Eigen::Index> where;
  for (std::size_t i = 0; i < r.ids.size(); ++i)
    if (!where.emplace(r.ids[i], static_cast<Eigen::Index>(i)).second)
      throw DataError("duplicate id '" + r.ids[i] + "' in response file");
  Dataset out;
  out.ids = p.ids;
  out.raw = std::move(p.raw);
  const auto n = static_cast<Eigen::Index>(p.ids.size());
  out.t.resize(n);
  if (r.y.size() > 0)
    out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto it = where.find(p.ids[static_cast<std::size_t>(i)]);
    if (it == where.end())
      throw DataError("id '" + p.ids[static_cast<std::size_t>(i)] + "' has no row in the response file");
    out.t(i) = r.t(it->second);
    if (r.y.size() > 0)
      out.y(i) = r.y(it->second);
  }
  if (!out.t.allFinite() || (out.y.size() > 0 && !out.y.allFinite()))
    throw DataError("response file contains non-finite values");
  return out;
}

// ---- JSON artifact --------------------------------------------------------

using Json = nlohmann::ordered_json;

inline Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      data.push_back(m(i, j));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw DataError("artifact: matrix data length does not match its shape");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(i, c) = data[static_cast<std::size_t>(i * cols + c)].get<double>();
  return m;
}

inline Json vector_to_json(const Vector& v) { return Json(to_std(v)); }

inline Vector vector_from_json(const Json& j) { return to_vector(j.get<std::vector<double>>()); }

inline Json basis_to_json(const BasisSpec& b) {
  Json j{{"kind", to_string(b.kind)}, {"dimension", b.dimension}, {"lo", b.lo}, {"hi", b.hi}, {"degree", b.degree}};
  j["interior_knots"] = b.interior_knots;
  return j;
}

inline BasisSpec basis_from_json(const Json& j) {
  BasisSpec b;
  b.kind = basis_kind_from_string(j.at("kind").get<std::string>());
  b.dimension = j.at("dimension").get<int>();
  b.lo = j.at("lo").get<double>();
  b.hi = j.at("hi").get<double>();
  b.degree = j.at("degree").get<int>();
  b.interior_knots = j.at("interior_knots").get<std::vector<double>>();
  b.validate();
  return b;
}

/// Everything needed to predict from raw curves: the curve smoother settings
/// and the fitted model.
struct ModelArtifact {
  Model model;
  std::vector<double> curve_grid;
  double curve_penalty = default_curve_penalty;
  TDomain t_domain;
  std::uint64_t seed = 0;
  std::string created;
  std::string version = tool_version;
};

inline Json artifact_to_json(const ModelArtifact& a) {
  const Model& m = a.model;
  Json j;
  j["format_version"] = artifact_format_version;
  j["kind"] = to_string(m.kind);
  j["curves"] = Json{{"basis", basis_to_json(m.fpca.basis)}, {"grid", a.curve_grid}, {"penalty", a.curve_penalty}};
  j["zeta_basis"] = basis_to_json(m.zeta_basis);
  j["t_basis"] = basis_to_json(m.t_basis);
  j["t_domain"] = Json{{"lo", a.t_domain.lo}, {"hi", a.t_domain.hi}, {"periodic", a.t_domain.periodic}};
  j["fpca"] = Json{{"q", m.fpca.q},
                   {"eigenvalues", vector_to_json(m.fpca.eigenvalues)},
                   {"eigenfunction_coefficients", matrix_to_json(m.fpca.eigenfunction_coefficients)},
                   {"mean_coefficients", vector_to_json(m.fpca.mean_coefficients)},
                   {"spectrum", vector_to_json(m.fpca.spectrum)},
                   {"total_variance", m.fpca.total_variance}};
  Json blocks = Json::array();
  for (const auto& b : m.blocks)
    blocks.push_back(matrix_to_json(b));
  j["blocks"] = std::move(blocks);
  j["lambdas"] = m.lambdas;
  j["sigma"] = Json{{"structure", to_string(m.sigma.structure)}, {"variance", m.sigma.variance}, {"rho", m.sigma.rho}};
  j["df"] = m.df;
  j["aic"] = m.aic;
  j["response_mean"] = m.response_mean;
  j["config"] = Json{{"m1", m.config.m1},
                     {"m2", m.config.m2},
                     {"lambda_zeta", m.config.lambda_zeta},
                     {"lambda_t", m.config.lambda_t},
                     {"sigma_structure", to_string(m.config.sigma_structure)},
                     {"max_gls_iterations", m.config.max_gls_iterations},
                     {"gls_tolerance", m.config.gls_tolerance}};
  j["provenance"] = Json{{"tool_version", a.version}, {"seed", a.seed}, {"created", a.created}};
  return j;
}

inline ModelArtifact artifact_from_json(const Json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != artifact_format_version)
      throw DataError("artifact format_version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(artifact_format_version) + ")");
    ModelArtifact a;
    Model& m = a.model;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    const Json& curves = j.at("curves");
    a.curve_grid = curves.at("grid").get<std::vector<double>>();
    a.curve_penalty = curves.at("penalty").get<double>();
    m.zeta_basis = basis_from_json(j.at("zeta_basis"));
    m.t_basis = basis_from_json(j.at("t_basis"));
    const Json& td = j.at("t_domain");
    a.t_domain = {td.at("lo").get<double>(), td.at("hi").get<double>(), td.at("periodic").get<bool>()};

    const Json& f = j.at("fpca");
    m.fpca.basis = basis_from_json(curves.at("basis"));
    m.fpca.q = f.at("q").get<int>();
    m.fpca.eigenvalues = vector_from_json(f.at("eigenvalues"));
    m.fpca.eigenfunction_coefficients = matrix_from_json(f.at("eigenfunction_coefficients"));
    m.fpca.mean_coefficients = vector_from_json(f.at("mean_coefficients"));
    m.fpca.spectrum = vector_from_json(f.at("spectrum"));
    m.fpca.total_variance = f.at("total_variance").get<double>();
    m.fpca.gram = gram_matrix(m.fpca.basis);
    const auto k = static_cast<Eigen::Index>(m.fpca.basis.dimension);
    if (m.fpca.eigenvalues.size() != m.fpca.q || m.fpca.eigenfunction_coefficients.rows() != k ||
        m.fpca.eigenfunction_coefficients.cols() != m.fpca.q || m.fpca.mean_coefficients.size() != k)
      throw DataError("artifact: FPCA dimensions are inconsistent");

    for (const auto& b : j.at("blocks"))
      m.blocks.push_back(matrix_from_json(b));
    m.lambdas = j.at("lambdas").get<std::vector<double>>();
    const Json& s = j.at("sigma");
    m.sigma.structure = sigma_structure_from_string(s.at("structure").get<std::string>());
    m.sigma.variance = s.at("variance").get<double>();
    m.sigma.rho = s.at("rho").get<double>();
    m.df = j.at("df").get<double>();
    m.aic = j.at("aic").get<double>();
    m.response_mean = j.at("response_mean").get<double>();
    const Json& c = j.at("config");
    m.config.m1 = c.at("m1").get<int>();
    m.config.m2 = c.at("m2").get<int>();
    m.config.lambda_zeta = c.at("lambda_zeta").get<double>();
    m.config.lambda_t = c.at("lambda_t").get<double>();
    m.config.sigma_structure = sigma_structure_from_string(c.at("sigma_structure").get<std::string>());
    m.config.max_gls_iterations = c.at("max_gls_iterations").get<int>();
    m.config.gls_tolerance = c.at("gls_tolerance").get<double>();
    const Json& p = j.at("provenance");
    a.version = p.at("tool_version").get<std::string>();
    a.seed = p.at("seed").get<std::uint64_t>();
    a.created = p.at("created").get<std::string>();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model artifact: ") + e.what());
  }
}

inline std::string dump_artifact(const ModelArtifact& a) { return artifact_to_json(a).dump(2) + "\n"; }

inline void save_artifact(const ModelArtifact& a, const std::filesystem::path& path) {
  write_atomic(path, dump_artifact(a));
}

inline ModelArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open model artifact '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model artifact '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return artifact_from_json(j);
}

} // namespace vcfam

#endif
