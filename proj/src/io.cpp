#include "sofsat/io.hpp"

#include <cctype>
#include <ctime>
#include <fstream>
#include <sstream>

namespace sofsat::io {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_number(const std::string& text, const std::string& where) {
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw InputError(where + ": '" + text + "' is not a number");
  }
  if (used != text.size()) throw InputError(where + ": '" + text + "' is not a number");
  return v;
}

const Json& require(const Json& doc, const std::string& key) {
  if (!doc.is_object() || !doc.contains(key)) throw InputError("missing key '" + key + "'");
  return doc.at(key);
}

double number_at(const Json& j, const std::string& where) {
  if (!j.is_number()) throw InputError(where + ": expected a number");
  return j.get<double>();
}

Index index_at(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw InputError(where + ": expected a nonnegative integer");
  return static_cast<Index>(j.get<long long>());
}

Vector vector_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i)
    v[static_cast<Index>(i)] = number_at(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Matrix shaped(const Json& j, Index rows, Index cols, const std::string& where) {
  Matrix m = matrix_from_json(j, where);
  if (m.size() == 0 && rows * cols == 0) return Matrix::Zero(rows, cols);
  if (m.rows() != rows || m.cols() != cols)
    throw InputError(where + ": matrix is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  return m;
}

AffineMatrix affine_from_json(const Json& doc, const std::string& key, Index rows, Index cols,
                              const Dims& d) {
  if (!doc.contains(key)) throw InputError("missing key '" + key + "'");
  const Json& j = doc.at(key);
  if (j.is_array()) return AffineMatrix::constant(shaped(j, rows, cols, key), d.n, d.l);
  if (!j.is_object()) throw InputError(key + ": expected a matrix or {const, x, delta}");
  for (const auto& [k, unused] : j.items())
    if (k != "const" && k != "x" && k != "delta")
      throw InputError(key + ": unknown field '" + k + "'");
  Matrix c = j.contains("const") ? shaped(j.at("const"), rows, cols, key + ".const")
                                 : Matrix::Zero(rows, cols);
  auto coeffs = [&](const char* field, Index count) {
    std::vector<Matrix> out;
    if (!j.contains(field)) {
      out.assign(static_cast<size_t>(count), Matrix::Zero(rows, cols));
      return out;
    }
    const Json& list = j.at(field);
    const std::string where = key + "." + field;
    if (!list.is_array() || static_cast<Index>(list.size()) != count)
      throw InputError(where + ": expected a list of " + std::to_string(count) + " matrices");
    for (size_t i = 0; i < list.size(); ++i)
      out.push_back(shaped(list[i], rows, cols, where + "[" + std::to_string(i) + "]"));
    return out;
  };
  return AffineMatrix(c, coeffs("x", d.n), coeffs("delta", d.l));
}

Json affine_to_json(const AffineMatrix& a) {
  Json j;
  j["const"] = matrix_to_json(a.const_term());
  Json xs = Json::array(), ds = Json::array();
  for (const auto& m : a.x_coeffs()) xs.push_back(matrix_to_json(m));
  for (const auto& m : a.delta_coeffs()) ds.push_back(matrix_to_json(m));
  j["x"] = xs;
  j["delta"] = ds;
  return j;
}

Polytope polytope_from_json(const Json& doc, const std::string& name, Index dim) {
  const std::string bounds = name + "_bounds", verts = name + "_vertices",
                    facets = name + "_facets";
  if (doc.contains(bounds)) {
    const Vector b = vector_from_json(doc.at(bounds), bounds);
    if (b.size() != dim)
      throw InputError(bounds + ": has " + std::to_string(b.size()) + " entries, expected " +
                       std::to_string(dim));
    try {
      return BoxPolytope(b);
    } catch (const InputError& e) {
      throw InputError(bounds + ": " + e.what());
    }
  }
  if (doc.contains(verts) || doc.contains(facets)) {
    auto list = [&](const std::string& key) {
      const Json& j = require(doc, key);
      if (!j.is_array()) throw InputError(key + ": expected a list of vectors");
      std::vector<Vector> out;
      for (size_t i = 0; i < j.size(); ++i) {
        out.push_back(vector_from_json(j[i], key + "[" + std::to_string(i) + "]"));
        if (out.back().size() != dim)
          throw InputError(key + "[" + std::to_string(i) + "]: expected " +
                           std::to_string(dim) + " entries");
      }
      return out;
    };
    try {
      return Polytope(dim, list(verts), list(facets));
    } catch (const InputError& e) {
      throw InputError(name + " polytope: " + e.what());
    }
  }
  if (dim == 0) return BoxPolytope(Vector(0));
  throw InputError("missing key '" + bounds + "' (or " + verts + " and " + facets + ")");
}

Json polytope_to_json(Json& doc, const Polytope& p, const std::string& name) {
  if (p.box()) {
    doc[name + "_bounds"] = vector_to_json(p.box()->bounds());
  } else {
    Json v = Json::array(), f = Json::array();
    for (const auto& x : p.vertices()) v.push_back(vector_to_json(x));
    for (const auto& a : p.facets()) f.push_back(vector_to_json(a));
    doc[name + "_vertices"] = v;
    doc[name + "_facets"] = f;
  }
  return doc;
}

}  // namespace

Monomial parse_monomial(const std::string& text, Index n) {
  const std::string t = trim(text);
  if (t.empty()) throw InputError("pi_oracle: empty monomial");
  if (t.back() == '*') throw InputError("pi_oracle: malformed monomial '" + t + "'");
  Monomial m;
  m.powers.assign(static_cast<size_t>(n), 0);
  std::stringstream ss(t);
  std::string factor;
  while (std::getline(ss, factor, '*')) {
    factor = trim(factor);
    if (factor.empty()) throw InputError("pi_oracle: malformed monomial '" + t + "'");
    if (factor[0] == 'x' || (factor[0] == '-' && factor.size() > 1 && factor[1] == 'x')) {
      if (factor[0] == '-') {
        m.coeff = -m.coeff;
        factor.erase(0, 1);
      }
      const size_t caret = factor.find('^');
      const std::string idx = factor.substr(1, caret == std::string::npos ? std::string::npos : caret - 1);
      if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos)
        throw InputError("pi_oracle: bad variable '" + factor + "' in '" + t + "'");
      const long k = std::stol(idx);
      if (k < 1 || k > n)
        throw InputError("pi_oracle: variable x" + idx + " out of range in '" + t + "'");
      int power = 1;
      if (caret != std::string::npos) {
        const std::string e = factor.substr(caret + 1);
        if (e.empty() || e.find_first_not_of("0123456789") != std::string::npos)
          throw InputError("pi_oracle: bad exponent in '" + t + "'");
        power = std::stoi(e);
      }
      m.powers[static_cast<size_t>(k - 1)] += power;
    } else {
      m.coeff *= parse_number(factor, "pi_oracle coefficient in '" + t + "'");
    }
  }
  return m;
}

std::vector<Monomial> parse_monomial_list(const std::string& text, Index n) {
  std::vector<Monomial> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_monomial(item, n));
  return out;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected a list of rows");
  if (j.empty()) return Matrix(0, 0);
  const size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (size_t r = 0; r < j.size(); ++r) {
    const std::string rw = where + " row " + std::to_string(r);
    if (!j[r].is_array()) throw InputError(rw + ": expected a list of numbers");
    if (j[r].size() != cols)
      throw InputError(rw + ": has " + std::to_string(j[r].size()) + " entries, expected " +
                       std::to_string(cols));
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Index>(r), static_cast<Index>(c)) =
          number_at(j[r][c], rw + " column " + std::to_string(c));
  }
  if (cols == 0) return Matrix(static_cast<Index>(j.size()), 0);
  return m;
}

DarModel parse_model(const Json& doc) {
  if (!doc.is_object()) throw InputError("model: expected a JSON object");
  const Json& dj = require(doc, "dims");
  Dims d;
  d.n = index_at(require(dj, "n"), "dims.n");
  d.n_pi = index_at(require(dj, "n_pi"), "dims.n_pi");
  d.n_pi_x = dj.contains("n_pi_x") ? index_at(dj.at("n_pi_x"), "dims.n_pi_x") : 0;
  d.m = index_at(require(dj, "m"), "dims.m");
  d.p = index_at(require(dj, "p"), "dims.p");
  d.l = dj.contains("l") ? index_at(dj.at("l"), "dims.l") : 0;
  if (d.n == 0 || d.m == 0 || d.p == 0) throw InputError("dims: n, m and p must be positive");
  if (d.n_pi_x > d.n_pi) throw InputError("dims: n_pi_x exceeds n_pi");

  DarData data;
  data.dims = d;
  data.A1 = affine_from_json(doc, "A1", d.n, d.n, d);
  data.A2 = d.n_pi ? affine_from_json(doc, "A2", d.n, d.n_pi, d)
                   : AffineMatrix::zero(d.n, 0, d.n, d.l);
  data.A3 = affine_from_json(doc, "A3", d.n, d.m, d);
  if (d.n_pi) {
    data.Ups1 = affine_from_json(doc, "Ups1", d.n_pi, d.n, d);
    data.Ups2 = affine_from_json(doc, "Ups2", d.n_pi, d.n_pi, d);
    data.Ups3 = doc.contains("Ups3") ? affine_from_json(doc, "Ups3", d.n_pi, d.m, d)
                                     : AffineMatrix::zero(d.n_pi, d.m, d.n, d.l);
  } else {
    data.Ups1 = AffineMatrix::zero(0, d.n, d.n, d.l);
    data.Ups2 = AffineMatrix::zero(0, 0, d.n, d.l);
    data.Ups3 = AffineMatrix::zero(0, d.m, d.n, d.l);
  }
  if (d.n_pi_x) {
    data.Sigma1 = affine_from_json(doc, "Sigma1", d.n_pi_x, d.n, d);
    data.Sigma2 = affine_from_json(doc, "Sigma2", d.n_pi_x, d.n_pi_x, d);
  }
  data.C1 = shaped(require(doc, "C1"), d.p, d.n, "C1");
  data.C2 = doc.contains("C2") ? shaped(doc.at("C2"), d.p, d.n_pi, "C2")
                               : Matrix::Zero(d.p, d.n_pi);
  data.u_bar = vector_from_json(require(doc, "u_bar"), "u_bar");
  if (data.u_bar.size() != d.m)
    throw InputError("u_bar: has " + std::to_string(data.u_bar.size()) +
                     " entries, expected " + std::to_string(d.m));
  data.X = polytope_from_json(doc, "X", d.n);
  data.D = polytope_from_json(doc, "D", d.l);
  if (doc.contains("pi_oracle") && !doc.at("pi_oracle").is_null()) {
    if (!doc.at("pi_oracle").is_string())
      throw InputError("pi_oracle: expected a string of monomials");
    auto monos = parse_monomial_list(doc.at("pi_oracle").get<std::string>(), d.n);
    if (static_cast<Index>(monos.size()) != d.n_pi)
      throw InputError("pi_oracle: has " + std::to_string(monos.size()) +
                       " entries, expected " + std::to_string(d.n_pi));
    data.pi_oracle = PiOracle::from_monomials(std::move(monos));
  }
  return DarModel(std::move(data));
}

DarModel load_model(const std::string& path) { return parse_model(read_json_file(path)); }

Json model_to_json(const DarModel& model) {
  const Dims& d = model.dims();
  Json doc;
  doc["dims"] = {{"n", d.n}, {"n_pi", d.n_pi}, {"n_pi_x", d.n_pi_x},
                 {"m", d.m}, {"p", d.p},       {"l", d.l}};
  doc["A1"] = affine_to_json(model.A1());
  doc["A2"] = affine_to_json(model.A2());
  doc["A3"] = affine_to_json(model.A3());
  doc["Ups1"] = affine_to_json(model.Ups1());
  doc["Ups2"] = affine_to_json(model.Ups2());
  doc["Ups3"] = affine_to_json(model.Ups3());
  if (d.n_pi_x) {
    doc["Sigma1"] = affine_to_json(model.Sigma1());
    doc["Sigma2"] = affine_to_json(model.Sigma2());
  }
  doc["C1"] = matrix_to_json(model.C1());
  doc["C2"] = matrix_to_json(model.C2());
  doc["u_bar"] = vector_to_json(model.u_bar());
  polytope_to_json(doc, model.X(), "X");
  polytope_to_json(doc, model.D(), "D");
  if (model.pi_oracle() && !model.pi_oracle()->monomials().empty()) {
    std::string s;
    for (const auto& m : model.pi_oracle()->monomials()) s += (s.empty() ? "" : ", ") + m.to_string();
    doc["pi_oracle"] = s;
  }
  return doc;
}

Json certificate_to_json(const Certificate& c) {
  Json j;
  j["P"] = matrix_to_json(c.P);
  j["N"] = matrix_to_json(c.N);
  j["Q"] = matrix_to_json(c.Q);
  j["S"] = matrix_to_json(c.S);
  j["R"] = matrix_to_json(c.R);
  j["W"] = matrix_to_json(c.W);
  j["Imult"] = matrix_to_json(c.Imult);
  j["Z"] = matrix_to_json(c.Z);
  Json g = Json::array(), gp = Json::array();
  for (const auto& m : c.Gbar) g.push_back(matrix_to_json(m));
  for (const auto& m : c.Gbar_pi) gp.push_back(matrix_to_json(m));
  j["Gbar"] = g;
  j["Gbar_pi"] = gp;
  j["Ls"] = matrix_to_json(c.Ls);
  if (c.lambda) j["lambda"] = *c.lambda;
  return j;
}

Certificate certificate_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("certificate: expected an object");
  auto mat = [&](const char* key) {
    return matrix_from_json(require(j, key), std::string("certificate.") + key);
  };
  auto list = [&](const char* key) {
    const Json& a = require(j, key);
    if (!a.is_array()) throw InputError(std::string("certificate.") + key + ": expected a list");
    std::vector<Matrix> out;
    for (size_t i = 0; i < a.size(); ++i)
      out.push_back(matrix_from_json(a[i], std::string("certificate.") + key + "[" +
                                               std::to_string(i) + "]"));
    return out;
  };
  Certificate c;
  c.P = mat("P");
  c.N = mat("N");
  c.Q = mat("Q");
  c.S = mat("S");
  c.R = mat("R");
  c.W = mat("W");
  c.Imult = mat("Imult");
  c.Z = mat("Z");
  c.Gbar = list("Gbar");
  c.Gbar_pi = list("Gbar_pi");
  c.Ls = mat("Ls");
  if (j.contains("lambda")) c.lambda = number_at(j.at("lambda"), "certificate.lambda");
  if (c.Gbar.empty()) throw InputError("certificate.Gbar: needs at least one block");
  return c;
}

Json synthesis_report(const DarModel& model, const SynthesisRun& run, const RunConfig& config,
                      const std::string& timestamp) {
  const SynthesisResult& fin = run.final();
  Json doc;
  doc["generated"] = timestamp;
  doc["format"] = "sofsat-report 1";
  doc["status"] = to_string(fin.status);
  doc["message"] = fin.message;
  doc["config"] = {{"i_max", config.i_max},
                   {"gamma", config.gamma},
                   {"skip_maximize", config.skip_maximize},
                   {"feas_tol", config.feas_tol},
                   {"gap_tol", config.gap_tol}};
  const Dims& d = model.dims();
  doc["dims"] = {{"n", d.n}, {"n_pi", d.n_pi}, {"n_pi_x", d.n_pi_x},
                 {"m", d.m}, {"p", d.p},       {"l", d.l}};
  Json a1;
  a1["status"] = to_string(run.feasibility.status);
  a1["iterations"] = run.feasibility.iterations;
  a1["lambda_history"] = run.feasibility.lambda_history;
  a1["message"] = run.feasibility.message;
  doc["algorithm1"] = a1;
  if (run.maximized) {
    Json a2;
    a2["status"] = to_string(run.maximized->status);
    a2["iterations"] = run.maximized->iterations;
    a2["trace_history"] = run.maximized->trace_history;
    a2["message"] = run.maximized->message;
    doc["algorithm2"] = a2;
  } else {
    doc["algorithm2"] = nullptr;
  }
  if (fin.has_certificate) {
    Matrix K;
    try {
      K = fin.gain();
      doc["K"] = matrix_to_json(K);
    } catch (const InputError&) {
      doc["K"] = nullptr;
    }
    doc["schur_margin"] = fin.schur_margin;
    try {
      const EllipsoidMetrics m = ellipsoid_metrics(fin.cert.P);
      doc["ellipsoid"] = {{"semi_axes", vector_to_json(m.semi_axes)},
                          {"max_radius", m.max_radius},
                          {"min_radius", m.min_radius},
                          {"trace", m.trace},
                          {"log_det_Pinv", m.log_det_Pinv},
                          {d.n == 2 ? "area" : "volume", m.volume}};
    } catch (const InputError&) {
      doc["ellipsoid"] = nullptr;
    }
    doc["certificate"] = certificate_to_json(fin.cert);
  } else {
    doc["K"] = nullptr;
    doc["certificate"] = nullptr;
  }
  return doc;
}

LoadedReport parse_report(const Json& doc) {
  if (!doc.is_object()) throw InputError("report: expected a JSON object");
  LoadedReport r;
  r.status = doc.contains("status") && doc.at("status").is_string()
                 ? doc.at("status").get<std::string>()
                 : "";
  if (!doc.contains("K") || doc.at("K").is_null()) throw InputError("report: missing gain K");
  r.K = matrix_from_json(doc.at("K"), "K");
  if (!doc.contains("certificate") || doc.at("certificate").is_null())
    throw InputError("report: missing certificate");
  r.cert = certificate_from_json(doc.at("certificate"));
  return r;
}

LoadedReport load_report(const std::string& path) { return parse_report(read_json_file(path)); }

Json verification_to_json(const VerificationReport& report, const std::string& timestamp) {
  Json doc;
  doc["generated"] = timestamp;
  doc["format"] = "sofsat-verification 1";
  doc["seed"] = report.seed;
  doc["pass"] = report.pass;
  Json checks = Json::array();
  for (const auto& c : report.checks) {
    Json j;
    j["name"] = c.name;
    j["samples"] = c.samples;
    if (std::isfinite(c.worst_margin))
      j["worst_margin"] = c.worst_margin;
    else
      j["worst_margin"] = c.worst_margin > 0 ? "inf" : "-inf";
    j["pass"] = c.pass;
    if (!c.detail.empty()) j["detail"] = c.detail;
    checks.push_back(j);
  }
  doc["checks"] = checks;
  return doc;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << doc.dump(2) << "\n";
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace sofsat::io
