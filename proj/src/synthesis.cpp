#include "sofsat/synthesis.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace sofsat {

std::string to_string(SynthesisStatus status) {
  switch (status) {
    case SynthesisStatus::kSuccess: return "success";
    case SynthesisStatus::kIterationLimit: return "iteration-limit";
    case SynthesisStatus::kSolverFailure: return "solver-failure";
  }
  return "solver-failure";
}

Matrix compute_gain(const Matrix& S, const Matrix& R) {
  if (R.rows() != R.cols() || S.cols() != R.rows())
    throw InputError("compute_gain: S must be p x m and R m x m");
  Eigen::LLT<Matrix> llt(0.5 * (R + R.transpose()));
  if (llt.info() != Eigen::Success)
    throw InputError("compute_gain: R is not positive definite");
  return -llt.solve(S.transpose());
}

Matrix SynthesisResult::gain() const { return compute_gain(cert.S, cert.R); }

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool all_pass(const std::vector<ConstraintMargin>& margins, std::string* first_bad) {
  for (const auto& m : margins)
    if (m.flagged) {
      if (first_bad) {
        std::ostringstream os;
        os << m.label << " (min eigenvalue " << m.min_eigenvalue << ")";
        *first_bad = os.str();
      }
      return false;
    }
  return true;
}

// Returns the Schur margin, or +inf when R is not positive definite.
double schur_margin(const Certificate& c) {
  try {
    return schur_stability_check(c.Q, c.S, c.R, 0.0).margin;
  } catch (const InputError&) {
    return std::numeric_limits<double>::infinity();
  }
}

bool schur_ok(const Certificate& c, double tol) {
  return schur_margin(c) <= tol * supply_scale(c.Q, c.S, c.R);
}

void require_well_posed(const DarModel& model, const SynthesisOptions& opts) {
  const auto wp = check_well_posedness(model, opts.well_posedness_grid);
  if (!wp.pass) throw InputError("model is not well posed: " + wp.message);
}

}  // namespace

std::vector<ConstraintMargin> recheck_certificate(const DarModel& model,
                                                  const Certificate& cert,
                                                  const AssemblyOptions& opts,
                                                  double margin_tol) {
  AssemblyOptions ao = opts;
  ao.affine_gbar = cert.Gbar.size() > 1;
  const bool relaxed = cert.lambda.has_value();
  const SynthesisVariables vars = SynthesisVariables::create(model.dims(), ao.affine_gbar, relaxed);
  ProgramSpec spec;
  spec.Ls = cert.Ls;
  spec.relaxed = relaxed;
  spec.objective = relaxed ? SynthesisObjective::kMinimizeLambda : SynthesisObjective::kMinimizeTrace;
  spec.lambda_floor = relaxed ? *cert.lambda : 0.0;
  LmiProgram prog = build_synthesis_program(model, vars, spec, ao);
  return verify_solution(prog, certificate_vector(vars, cert), margin_tol);
}

SynthesisResult algorithm1(const DarModel& model, const SynthesisOptions& opts) {
  const auto t0 = Clock::now();
  require_well_posed(model, opts);
  const Dims& d = model.dims();
  SynthesisResult res;
  res.status = SynthesisStatus::kIterationLimit;
  res.message = "iteration limit reached";

  const SynthesisVariables vars = SynthesisVariables::create(d, opts.assembly.affine_gbar, true);
  Matrix S0 = Matrix::Zero(d.p, d.m);
  Matrix R0 = Matrix::Identity(d.m, d.m);
  double best_lambda = std::numeric_limits<double>::infinity();
  SolverOptions feasibility_solver = opts.solver;
  feasibility_solver.variable_bound = opts.feasibility_bound;

  for (int i = 0; i < opts.i_max; ++i) {
    res.iterations = i + 1;
    ProgramSpec spec;
    spec.Ls = supply_multiplier(S0, R0);
    spec.relaxed = true;
    spec.objective = SynthesisObjective::kMinimizeLambda;
    spec.lambda_floor = opts.lambda_floor;
    const LmiProgram prog = build_synthesis_program(model, vars, spec, opts.assembly);
    const SolveReport rep = solve(prog, feasibility_solver);
    if (!rep.ok()) {
      res.status = SynthesisStatus::kSolverFailure;
      res.message = "iteration " + std::to_string(i + 1) + ": solver returned " +
                    to_string(rep.status) + " (" + rep.message + ")";
      break;
    }
    Certificate cert = extract_certificate(vars, rep.y);
    cert.Ls = spec.Ls;
    const double lambda = *cert.lambda;
    res.lambda_history.push_back(lambda);
    if (lambda < best_lambda) {
      best_lambda = lambda;
      res.cert = cert;
      res.has_certificate = true;
      res.schur_margin = schur_margin(cert);
    }

    if (lambda <= 0.0 || schur_ok(cert, opts.schur_tol)) {
      std::string bad;
      if (!all_pass(verify_solution(prog, rep.y, opts.verify_tol), &bad)) {
        res.status = SynthesisStatus::kSolverFailure;
        res.message = "solver point fails re-verification at " + bad;
        break;
      }
      if (!schur_ok(cert, opts.schur_tol)) {
        res.status = SynthesisStatus::kSolverFailure;
        res.message = "lambda <= 0 but the Schur test fails";
        break;
      }
      res.cert = cert;
      res.has_certificate = true;
      res.schur_margin = schur_margin(cert);
      res.status = SynthesisStatus::kSuccess;
      res.message = "stabilizing gain found";
      break;
    }
    S0 = cert.S;
    R0 = cert.R;
  }
  res.wall_time = seconds_since(t0);
  return res;
}

SynthesisResult algorithm2(const DarModel& model, const SynthesisResult& seed,
                           const SynthesisOptions& opts) {
  if (!seed.ok() || !seed.has_certificate)
    throw InputError("algorithm2: seed must be a successful synthesis result");
  const auto t0 = Clock::now();
  const Dims& d = model.dims();
  if (seed.cert.S.rows() != d.p || seed.cert.S.cols() != d.m || seed.cert.P.rows() != d.n)
    throw InputError("algorithm2: seed dimensions do not match the model");

  SynthesisResult res;
  res.status = SynthesisStatus::kIterationLimit;
  res.message = "iteration limit reached";
  res.cert = seed.cert;
  res.has_certificate = true;
  res.schur_margin = seed.schur_margin;
  res.lambda_history = seed.lambda_history;

  const SynthesisVariables vars = SynthesisVariables::create(d, opts.assembly.affine_gbar, false);
  Matrix S0 = seed.cert.S, R0 = seed.cert.R;
  double trace0 = seed.cert.P.trace();

  for (int i = 0; i < opts.i_max; ++i) {
    res.iterations = i + 1;
    ProgramSpec spec;
    spec.Ls = supply_multiplier(S0, R0);
    spec.relaxed = false;
    spec.objective = SynthesisObjective::kMinimizeTrace;
    const LmiProgram prog = build_synthesis_program(model, vars, spec, opts.assembly);
    const SolveReport rep = solve(prog, opts.solver);
    if (!rep.ok()) {
      res.status = SynthesisStatus::kSolverFailure;
      res.message = "iteration " + std::to_string(i + 1) + ": solver returned " +
                    to_string(rep.status) + " (" + rep.message + ")";
      break;
    }
    std::string bad;
    if (!all_pass(verify_solution(prog, rep.y, opts.verify_tol), &bad)) {
      res.status = SynthesisStatus::kSolverFailure;
      res.message = "solver point fails re-verification at " + bad;
      break;
    }
    Certificate cert = extract_certificate(vars, rep.y);
    cert.Ls = spec.Ls;
    if (!schur_ok(cert, opts.schur_tol)) {
      res.status = SynthesisStatus::kSolverFailure;
      res.message = "supply-rate certificate fails the Schur test";
      break;
    }
    const double tr = cert.P.trace();
    res.trace_history.push_back(tr);
    res.cert = cert;
    res.schur_margin = schur_margin(cert);
    if (std::abs(tr - trace0) <= opts.gamma) {
      res.status = SynthesisStatus::kSuccess;
      res.message = "trace converged";
      break;
    }
    S0 = cert.S;
    R0 = cert.R;
    trace0 = tr;
  }
  res.wall_time = seconds_since(t0);
  return res;
}

EllipsoidMetrics ellipsoid_metrics(const Matrix& P) {
  if (P.rows() != P.cols() || P.rows() == 0)
    throw InputError("ellipsoid_metrics: P must be square and nonempty");
  const Matrix Ps = 0.5 * (P + P.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(Ps, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0) throw InputError("ellipsoid_metrics: P is not positive definite");
  const Index n = P.rows();
  EllipsoidMetrics m;
  m.semi_axes = ev.reverse().cwiseSqrt().cwiseInverse();
  m.min_radius = m.semi_axes.minCoeff();
  m.max_radius = m.semi_axes.maxCoeff();
  m.log_det_Pinv = -ev.array().log().sum();
  const double nd = static_cast<double>(n);
  const double unit_ball =
      std::pow(std::numbers::pi, nd / 2.0) / std::tgamma(nd / 2.0 + 1.0);
  m.volume = unit_ball * std::exp(0.5 * m.log_det_Pinv);
  m.trace = Ps.trace();
  return m;
}

double ellipsoid_facet_ratio(const DarModel& model, const Matrix& P) {
  Eigen::LLT<Matrix> llt(0.5 * (P + P.transpose()));
  if (llt.info() != Eigen::Success)
    throw InputError("ellipsoid_facet_ratio: P is not positive definite");
  double worst = 0.0;
  for (const Vector& a : model.X().facets()) worst = std::max(worst, a.dot(llt.solve(a)));
  return worst;
}

}  // namespace sofsat
