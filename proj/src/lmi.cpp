#include "sofsat/lmi.hpp"

#include <algorithm>
#include <cmath>

namespace sofsat {

namespace {

double strict_margin(const LinearMatrixExpression& e, const AssemblyOptions& o) {
  const Matrix& c = e.term().constant_part();
  const double scale = c.size() ? std::max(1.0, c.cwiseAbs().maxCoeff()) : 1.0;
  return o.strict_eps * scale;
}

std::string vertex_label(const ParameterPoint& pt) {
  std::string s = "x=(";
  for (Index i = 0; i < pt.x.size(); ++i) {
    if (i) s += ",";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", pt.x[i]);
    s += buf;
  }
  s += ")";
  if (pt.delta.size()) {
    s += " delta=(";
    for (Index i = 0; i < pt.delta.size(); ++i) {
      if (i) s += ",";
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", pt.delta[i]);
      s += buf;
    }
    s += ")";
  }
  return s;
}

Matrix combine(const std::vector<Matrix>& coeffs, const Vector& x,
               const Vector& delta) {
  Matrix out = coeffs.front();
  if (coeffs.size() == 1) return out;
  for (Index i = 0; i < x.size(); ++i) out += x[i] * coeffs[static_cast<size_t>(1 + i)];
  for (Index j = 0; j < delta.size(); ++j)
    out += delta[j] * coeffs[static_cast<size_t>(1 + x.size() + j)];
  return out;
}

}  // namespace

LinearTerm LmiConstraint::canonical() const {
  const Index d = expr.dim();
  switch (sense) {
    case ConstraintSense::kPsd:
      return expr.term();
    case ConstraintSense::kPositiveDefinite:
      return expr.term() - LinearTerm::constant(margin * Matrix::Identity(d, d));
    case ConstraintSense::kNegativeDefinite:
      return (-1.0) * expr.term() - LinearTerm::constant(margin * Matrix::Identity(d, d));
  }
  return expr.term();
}

SynthesisVariables SynthesisVariables::create(const Dims& d, bool affine_gbar,
                                              bool with_lambda) {
  SynthesisVariables v;
  v.dims = d;
  auto& r = v.registry;
  v.P = r.add("P", d.n, d.n, BlockStructure::kSymmetric);
  v.N = r.add("N", d.n, d.n, BlockStructure::kSymmetric);
  v.R = r.add("R", d.m, d.m, BlockStructure::kSymmetric);
  v.Q = r.add("Q", d.p, d.p, BlockStructure::kSymmetric);
  v.W = r.add("W", d.m, d.m, BlockStructure::kDiagonal);
  v.S = r.add("S", d.p, d.m, BlockStructure::kFull);
  v.Imult = r.add("Imult", d.n + d.n_pi + 2 * d.m, d.n_pi, BlockStructure::kFull);
  v.Z = r.add("Z", d.n_pi_x, d.n_pi_x, BlockStructure::kFull);
  const Index ncoef = affine_gbar ? 1 + d.n + d.l : 1;
  auto coef_name = [&](const std::string& base, Index k) {
    if (k == 0) return base + "_0";
    if (k <= d.n) return base + "_x" + std::to_string(k);
    return base + "_d" + std::to_string(k - d.n);
  };
  for (Index k = 0; k < ncoef; ++k)
    v.Gbar.push_back(r.add(coef_name("Gbar", k), d.m, d.n, BlockStructure::kFull));
  for (Index k = 0; k < ncoef; ++k)
    v.Gbar_pi.push_back(
        r.add(coef_name("Gbar_pi", k), d.m, d.n_pi_x, BlockStructure::kFull));
  if (with_lambda) v.lambda = r.add("lambda", 1, 1, BlockStructure::kSymmetric);
  return v;
}

LinearTerm SynthesisVariables::gbar_at(const Vector& x, const Vector& delta) const {
  LinearTerm t = term(Gbar.front());
  if (!affine_gbar()) return t;
  for (Index i = 0; i < x.size(); ++i)
    t += x[i] * term(Gbar[static_cast<size_t>(1 + i)]);
  for (Index j = 0; j < delta.size(); ++j)
    t += delta[j] * term(Gbar[static_cast<size_t>(1 + x.size() + j)]);
  return t;
}

LinearTerm SynthesisVariables::gbar_pi_at(const Vector& x, const Vector& delta) const {
  LinearTerm t = term(Gbar_pi.front());
  if (!affine_gbar()) return t;
  for (Index i = 0; i < x.size(); ++i)
    t += x[i] * term(Gbar_pi[static_cast<size_t>(1 + i)]);
  for (Index j = 0; j < delta.size(); ++j)
    t += delta[j] * term(Gbar_pi[static_cast<size_t>(1 + x.size() + j)]);
  return t;
}

Matrix Certificate::gbar_at(const Vector& x, const Vector& delta) const {
  return combine(Gbar, x, delta);
}

Matrix Certificate::gbar_pi_at(const Vector& x, const Vector& delta) const {
  return combine(Gbar_pi, x, delta);
}

Certificate extract_certificate(const SynthesisVariables& v, const Vector& y) {
  const auto& r = v.registry;
  Certificate c;
  c.P = r.value(v.P, y);
  c.N = r.value(v.N, y);
  c.Q = r.value(v.Q, y);
  c.S = r.value(v.S, y);
  c.R = r.value(v.R, y);
  c.W = r.value(v.W, y);
  c.Imult = r.value(v.Imult, y);
  c.Z = r.value(v.Z, y);
  for (Index id : v.Gbar) c.Gbar.push_back(r.value(id, y));
  for (Index id : v.Gbar_pi) c.Gbar_pi.push_back(r.value(id, y));
  if (v.lambda) c.lambda = y[r.block(*v.lambda).offset];
  return c;
}

Vector certificate_vector(const SynthesisVariables& v, const Certificate& c) {
  const auto& r = v.registry;
  if (c.Gbar.size() != v.Gbar.size() || c.Gbar_pi.size() != v.Gbar_pi.size())
    throw InputError("certificate: Gbar coefficient count does not match");
  Vector y = Vector::Zero(r.num_variables());
  r.set_value(v.P, c.P, y);
  r.set_value(v.N, c.N, y);
  r.set_value(v.Q, c.Q, y);
  r.set_value(v.S, c.S, y);
  r.set_value(v.R, c.R, y);
  r.set_value(v.W, c.W, y);
  r.set_value(v.Imult, c.Imult, y);
  r.set_value(v.Z, c.Z, y);
  for (size_t k = 0; k < v.Gbar.size(); ++k) r.set_value(v.Gbar[k], c.Gbar[k], y);
  for (size_t k = 0; k < v.Gbar_pi.size(); ++k)
    r.set_value(v.Gbar_pi[k], c.Gbar_pi[k], y);
  if (v.lambda) y[r.block(*v.lambda).offset] = c.lambda.value_or(0.0);
  return y;
}

Matrix supply_multiplier(const Matrix& S0, const Matrix& R0) {
  const Index p = S0.rows(), m = S0.cols();
  Matrix Ls(p + m, m);
  // top block: (-R0^{-1} S0')' = -S0 R0^{-1}
  Ls.topRows(p) = -R0.llt().solve(S0.transpose()).transpose();
  Ls.bottomRows(m) = -Matrix::Identity(m, m);
  return Ls;
}

LinearMatrixExpression build_phi(const DarModel& model, const ParameterPoint& pt,
                                 const SynthesisVariables& v) {
  const Dims& d = model.dims();
  const Index ox = 0, op = d.n, ov = d.n + d.n_pi, of = d.n + d.n_pi + d.m;
  LinearMatrixExpression phi(d.n + d.n_pi + 2 * d.m);

  const Matrix A1 = model.A1().evaluate(pt.x, pt.delta);
  const Matrix A2 = model.A2().evaluate(pt.x, pt.delta);
  const Matrix A3 = model.A3().evaluate(pt.x, pt.delta);
  const Matrix& C1 = model.C1();
  const Matrix& C2 = model.C2();

  const LinearTerm P = v.term(v.P);
  const LinearTerm N = v.term(v.N);
  const LinearTerm Q = v.term(v.Q);
  const LinearTerm R = v.term(v.R);
  const LinearTerm S = v.term(v.S);
  const LinearTerm W = v.term(v.W);
  const LinearTerm St = S.transpose();

  const LinearTerm PA1 = P * A1;
  phi.add_diagonal_block(ox, PA1 + PA1.transpose() + N - C1.transpose() * Q * C1);
  if (d.n_pi > 0) {
    phi.add_off_diagonal_block(op, ox, A2.transpose() * P - C2.transpose() * Q * C1);
    phi.add_diagonal_block(op, -(C2.transpose() * Q * C2));
    phi.add_off_diagonal_block(ov, op, -(St * C2));
  }
  phi.add_off_diagonal_block(ov, ox, A3.transpose() * P - St * C1);
  phi.add_diagonal_block(ov, -R);
  phi.add_off_diagonal_block(of, ox, A3.transpose() * P + v.gbar_at(pt.x, pt.delta));
  if (d.n_pi_x > 0)
    phi.add_off_diagonal_block(of, op, v.gbar_pi_at(pt.x, pt.delta));
  phi.add_off_diagonal_block(of, ov, -W);
  phi.add_diagonal_block(of, -2.0 * W);
  return phi;
}

Matrix build_gamma(const DarModel& model, const ParameterPoint& pt) {
  const Dims& d = model.dims();
  Matrix g(d.n_pi, d.n + d.n_pi + 2 * d.m);
  const Matrix ups3 = model.Ups3().evaluate(pt.x, pt.delta);
  g << model.Ups1().evaluate(pt.x, pt.delta), model.Ups2().evaluate(pt.x, pt.delta),
      ups3, ups3;
  return g;
}

LinearMatrixExpression dissipativity_expression(const DarModel& model,
                                                const ParameterPoint& pt,
                                                const SynthesisVariables& v) {
  LinearMatrixExpression e = build_phi(model, pt, v);
  if (model.dims().n_pi > 0) e.add_he(v.term(v.Imult) * build_gamma(model, pt));
  return e;
}

LinearMatrixExpression sector_expression(const DarModel& model,
                                         const ParameterPoint& pt,
                                         const SynthesisVariables& v,
                                         Index i) {
  const Dims& d = model.dims();
  const Index nx = d.n_pi_x;
  const Index last = d.n + nx;
  LinearMatrixExpression e(last + 1);
  e.add_diagonal_block(0, v.term(v.P));
  if (nx > 0) {
    const LinearTerm Z = v.term(v.Z);
    const LinearTerm ZS2 = Z * model.Sigma2().evaluate(pt.x, pt.delta);
    e.add_off_diagonal_block(d.n, 0, Z * model.Sigma1().evaluate(pt.x, pt.delta));
    e.add_diagonal_block(d.n, ZS2 + ZS2.transpose());
    e.add_off_diagonal_block(last, d.n, v.gbar_pi_at(pt.x, pt.delta).block(i, 0, 1, nx));
  }
  e.add_off_diagonal_block(last, 0, v.gbar_at(pt.x, pt.delta).block(i, 0, 1, d.n));
  const double ub = model.u_bar()[i];
  e.add_diagonal_block(last, 2.0 * v.term(v.W).block(i, i, 1, 1) -
                                 LinearTerm::constant(Matrix::Constant(1, 1, 1.0 / (ub * ub))));
  return e;
}

LinearMatrixExpression polytope_expression(const SynthesisVariables& v,
                                           const Vector& a) {
  const Index n = a.size();
  LinearMatrixExpression e(n + 1);
  e.add_diagonal_block(0, v.term(v.P));
  e.add_off_diagonal_block(n, 0, LinearTerm::constant(a.transpose()));
  e.add_diagonal_block(n, LinearTerm::constant(Matrix::Ones(1, 1)));
  return e;
}

LinearMatrixExpression supply_rate_expression(const SynthesisVariables& v,
                                              const Matrix& Ls, bool relaxed) {
  const Index p = v.dims.p, m = v.dims.m;
  if (Ls.rows() != p + m || Ls.cols() != m)
    throw InputError("supply rate: Ls must be (p+m) x m");
  LinearMatrixExpression e(p + m);
  const LinearTerm S = v.term(v.S);
  const LinearTerm R = v.term(v.R);
  e.add_diagonal_block(0, v.term(v.Q));
  e.add_off_diagonal_block(p, 0, S.transpose());
  e.add_diagonal_block(p, R);
  const LinearTerm Cs = S.transpose().embed(m, p + m, 0, 0) + R.embed(m, p + m, 0, p);
  e.add_he(Ls * Cs);
  if (relaxed) {
    if (!v.lambda) throw InputError("supply rate: relaxed form needs lambda");
    Matrix J = Matrix::Zero(p + m, p + m);
    J.topLeftCorner(p, p) = -Matrix::Identity(p, p);
    e.add_diagonal_block(0, v.term(*v.lambda).scalar_times(J));
  }
  return e;
}

std::vector<LmiConstraint> assemble_dissipativity(const DarModel& model,
                                                  const SynthesisVariables& v,
                                                  const AssemblyOptions& opts) {
  std::vector<LmiConstraint> out;
  for (const auto& pt : product_vertices(model.X(), model.D())) {
    LmiConstraint c;
    c.label = "dissipativity " + vertex_label(pt);
    c.expr = dissipativity_expression(model, pt, v);
    c.sense = ConstraintSense::kNegativeDefinite;
    c.margin = strict_margin(c.expr, opts);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<LmiConstraint> assemble_sector_inclusion(const DarModel& model,
                                                     const SynthesisVariables& v) {
  std::vector<LmiConstraint> out;
  for (const auto& pt : product_vertices(model.X(), model.D())) {
    for (Index i = 0; i < model.dims().m; ++i) {
      LmiConstraint c;
      c.label = "sector[" + std::to_string(i) + "] " + vertex_label(pt);
      c.expr = sector_expression(model, pt, v, i);
      c.sense = ConstraintSense::kPsd;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<LmiConstraint> assemble_polytope_inclusion(const DarModel& model,
                                                       const SynthesisVariables& v) {
  std::vector<LmiConstraint> out;
  const auto& facets = model.X().facets();
  for (size_t k = 0; k < facets.size(); ++k) {
    LmiConstraint c;
    c.label = "polytope[" + std::to_string(k) + "]";
    c.expr = polytope_expression(v, facets[k]);
    c.sense = ConstraintSense::kPsd;
    out.push_back(std::move(c));
  }
  return out;
}

LmiConstraint assemble_supply_rate(const SynthesisVariables& v, const Matrix& Ls,
                                   bool relaxed, const AssemblyOptions& opts) {
  LmiConstraint c;
  c.label = relaxed ? "supply rate (relaxed)" : "supply rate";
  c.expr = supply_rate_expression(v, Ls, relaxed);
  c.sense = ConstraintSense::kNegativeDefinite;
  c.margin = strict_margin(c.expr, opts);
  return c;
}

std::vector<LmiConstraint> assemble_definiteness(const SynthesisVariables& v,
                                                 const AssemblyOptions& opts) {
  std::vector<LmiConstraint> out;
  auto add = [&](const char* label, Index block, double margin) {
    LmiConstraint c;
    c.label = label;
    c.expr = LinearMatrixExpression(v.registry.block(block).rows);
    c.expr.add_diagonal_block(0, v.term(block));
    c.sense = ConstraintSense::kPositiveDefinite;
    c.margin = margin;
    out.push_back(std::move(c));
  };
  add("P > 0", v.P, opts.strict_eps);
  add("N > 0", v.N, opts.n_min);
  add("R > 0", v.R, opts.strict_eps);
  add("W > 0", v.W, opts.strict_eps);
  return out;
}

LmiProgram build_synthesis_program(const DarModel& model,
                                   const SynthesisVariables& v,
                                   const ProgramSpec& spec,
                                   const AssemblyOptions& opts) {
  LmiProgram prog;
  prog.registry = v.registry;
  auto append = [&](std::vector<LmiConstraint> cs) {
    for (auto& c : cs) prog.constraints.push_back(std::move(c));
  };
  append(assemble_dissipativity(model, v, opts));
  append(assemble_sector_inclusion(model, v));
  append(assemble_polytope_inclusion(model, v));
  prog.constraints.push_back(assemble_supply_rate(v, spec.Ls, spec.relaxed, opts));
  append(assemble_definiteness(v, opts));

  prog.objective = Vector::Zero(v.registry.num_variables());
  if (spec.objective == SynthesisObjective::kMinimizeLambda) {
    if (!spec.relaxed || !v.lambda)
      throw InputError("synthesis program: lambda objective needs relaxed form");
    prog.objective[v.registry.block(*v.lambda).offset] = 1.0;
  } else {
    // trace(P): diagonal entries of the lower-triangle layout
    const auto& b = v.registry.block(v.P);
    Index k = b.offset;
    for (Index j = 0; j < b.rows; ++j) {
      prog.objective[k] = 1.0;
      k += b.rows - j;
    }
  }
  if (spec.relaxed && v.lambda) {
    LmiConstraint c;
    c.label = "lambda floor";
    c.expr = LinearMatrixExpression(1);
    c.expr.add_diagonal_block(
        0, v.term(*v.lambda) - LinearTerm::constant(Matrix::Constant(1, 1, spec.lambda_floor)));
    c.sense = ConstraintSense::kPsd;
    prog.constraints.push_back(std::move(c));
  }
  return prog;
}

double supply_scale(const Matrix& Q, const Matrix& S, const Matrix& R) {
  double s = 1.0;
  if (Q.size()) s = std::max(s, Q.cwiseAbs().maxCoeff());
  if (S.size()) s = std::max(s, S.cwiseAbs().maxCoeff());
  if (R.size()) s = std::max(s, R.cwiseAbs().maxCoeff());
  return s;
}

SchurCheck schur_stability_check(const Matrix& Q, const Matrix& S, const Matrix& R,
                                 double tol) {
  if (R.rows() != R.cols() || S.cols() != R.rows() || Q.rows() != S.rows() ||
      Q.cols() != Q.rows())
    throw InputError("schur check: incompatible Q, S, R shapes");
  Eigen::LLT<Matrix> llt(0.5 * (R + R.transpose()));
  if (llt.info() != Eigen::Success ||
      Eigen::SelfAdjointEigenSolver<Matrix>(R).eigenvalues().minCoeff() <= 0.0)
    throw InputError("schur check: R is not positive definite");
  Matrix M = Q - S * llt.solve(S.transpose());
  M = 0.5 * (M + M.transpose());
  SchurCheck out;
  out.margin = M.size() ? Eigen::SelfAdjointEigenSolver<Matrix>(M).eigenvalues().maxCoeff()
                        : -std::numeric_limits<double>::infinity();
  out.pass = out.margin <= tol;
  return out;
}

}  // namespace sofsat
