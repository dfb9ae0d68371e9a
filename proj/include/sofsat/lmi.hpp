#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sofsat/dar_model.hpp"
#include "sofsat/linear_term.hpp"

namespace sofsat {

// kPsd:              expr >= 0
// kPositiveDefinite: expr >= margin * I
// kNegativeDefinite: expr <= -margin * I
enum class ConstraintSense { kPsd, kPositiveDefinite, kNegativeDefinite };

struct LmiConstraint {
  std::string label;
  LinearMatrixExpression expr;
  ConstraintSense sense = ConstraintSense::kPsd;
  double margin = 0.0;

  // The constraint rewritten as G(y) >= 0.
  LinearTerm canonical() const;
};

struct LmiProgram {
  DecisionRegistry registry;
  std::vector<LmiConstraint> constraints;
  Vector objective;  // minimize objective' y; empty for a feasibility problem

  bool is_feasibility() const { return objective.size() == 0; }
};

struct AssemblyOptions {
  // Strict inequalities become <= -eps*scale*I, scale = max(1, max |constant entry|).
  double strict_eps = 1e-7;
  // Lower bound N >= n_min * I for the dissipation term x'Nx.
  double n_min = 1e-6;
  // Gbar and Gbar_pi affine in (x, delta); false keeps them constant.
  bool affine_gbar = true;
};

// Decision blocks of the synthesis LMIs for one model.
struct SynthesisVariables {
  DecisionRegistry registry;
  Index P = -1, N = -1, R = -1, Q = -1, W = -1, S = -1, Imult = -1, Z = -1;
  // Coefficient blocks: constant, then one per state, then one per parameter.
  // Only the constant block when affine_gbar is off.
  std::vector<Index> Gbar;
  std::vector<Index> Gbar_pi;
  std::optional<Index> lambda;
  Dims dims;

  static SynthesisVariables create(const Dims& dims, bool affine_gbar,
                                   bool with_lambda);

  LinearTerm term(Index block) const { return LinearTerm::variable(registry, block); }
  LinearTerm gbar_at(const Vector& x, const Vector& delta) const;
  LinearTerm gbar_pi_at(const Vector& x, const Vector& delta) const;
  bool affine_gbar() const { return Gbar.size() > 1; }
};

// Numeric values of every decision block.
struct Certificate {
  Matrix P, N, Q, S, R, W, Imult, Z;
  std::vector<Matrix> Gbar;
  std::vector<Matrix> Gbar_pi;
  Matrix Ls;  // multiplier of the supply-rate constraint it was solved with
  std::optional<double> lambda;

  Matrix gbar_at(const Vector& x, const Vector& delta) const;
  Matrix gbar_pi_at(const Vector& x, const Vector& delta) const;
};

Certificate extract_certificate(const SynthesisVariables& vars, const Vector& y);
Vector certificate_vector(const SynthesisVariables& vars, const Certificate& cert);

// Ls = [-R0^{-1} S0' ; -I]  ((p+m) x m).
Matrix supply_multiplier(const Matrix& S0, const Matrix& R0);

// Quadratic form of (x, pi, v, phi) whose sign encodes
// Vdot + x'Nx + B - r along the DAR.
LinearMatrixExpression build_phi(const DarModel& model, const ParameterPoint& pt,
                                 const SynthesisVariables& vars);
// [Ups1 Ups2 Ups3 Ups3], annihilates (x, pi, v, phi).
Matrix build_gamma(const DarModel& model, const ParameterPoint& pt);

LinearMatrixExpression dissipativity_expression(const DarModel& model,
                                                const ParameterPoint& pt,
                                                const SynthesisVariables& vars);
LinearMatrixExpression sector_expression(const DarModel& model,
                                         const ParameterPoint& pt,
                                         const SynthesisVariables& vars,
                                         Index channel);
LinearMatrixExpression polytope_expression(const SynthesisVariables& vars,
                                           const Vector& facet);
LinearMatrixExpression supply_rate_expression(const SynthesisVariables& vars,
                                              const Matrix& Ls, bool relaxed);

// One strict constraint per vertex of X x D.
std::vector<LmiConstraint> assemble_dissipativity(const DarModel& model,
                                                  const SynthesisVariables& vars,
                                                  const AssemblyOptions& opts);
// m constraints per vertex; n_pi_x == 0 gives the reduced (n+1) blocks.
std::vector<LmiConstraint> assemble_sector_inclusion(const DarModel& model,
                                                     const SynthesisVariables& vars);
// One (n+1) block per facet vector of X.
std::vector<LmiConstraint> assemble_polytope_inclusion(const DarModel& model,
                                                       const SynthesisVariables& vars);
LmiConstraint assemble_supply_rate(const SynthesisVariables& vars, const Matrix& Ls,
                                   bool relaxed, const AssemblyOptions& opts);
// P > 0, N >= n_min I, R > 0, W > 0.
std::vector<LmiConstraint> assemble_definiteness(const SynthesisVariables& vars,
                                                 const AssemblyOptions& opts);

enum class SynthesisObjective { kMinimizeLambda, kMinimizeTrace };

struct ProgramSpec {
  Matrix Ls;
  bool relaxed = false;
  SynthesisObjective objective = SynthesisObjective::kMinimizeTrace;
  // Lower bound on lambda in relaxed mode (keeps the objective bounded).
  double lambda_floor = -1.0;
};

LmiProgram build_synthesis_program(const DarModel& model,
                                   const SynthesisVariables& vars,
                                   const ProgramSpec& spec,
                                   const AssemblyOptions& opts);

struct SchurCheck {
  bool pass = false;
  double margin = 0.0;  // max eigenvalue of Q - S R^{-1} S'
};

// Throws InputError when R is not positive definite.
SchurCheck schur_stability_check(const Matrix& Q, const Matrix& S, const Matrix& R,
                                 double tol);

// Largest absolute entry of Q, S and R, floored at 1.
double supply_scale(const Matrix& Q, const Matrix& S, const Matrix& R);

}  // namespace sofsat
