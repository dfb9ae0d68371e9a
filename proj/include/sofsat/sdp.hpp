#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sofsat/lmi.hpp"

namespace sofsat {

enum class SolveStatus { kOptimal, kFeasible, kInfeasible, kNumericalFailure, kIterationLimit };

std::string to_string(SolveStatus s);

struct SolverOptions {
  double feas_tol = 1e-8;  // relative primal/dual residual
  double gap_tol = 1e-8;   // relative duality gap
  int max_iterations = 200;
  // Box |y_i| <= variable_bound added to every solve; keeps the LMI feasible
  // set compact. Non-positive disables it.
  double variable_bound = 1e2;
  double step_fraction = 0.95;
  // A point whose LMIs hold within feas_tol is still returned as feasible
  // when the gap stalls above gap_tol but below this.
  double fallback_gap = 1e-3;
  bool verbose = false;

  // Reads SOFSAT_SOLVER_TOL, when set, into feas_tol and gap_tol.
  static SolverOptions from_environment();
};

struct SolveReport {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Vector y;                    // decision vector
  std::vector<Matrix> blocks;  // value of every registered block, symmetrized
  double objective = 0.0;
  double worst_violation = 0.0;  // relative, over all constraints
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;
  int iterations = 0;
  double wall_time = 0.0;  // seconds
  std::string message;

  bool ok() const { return status == SolveStatus::kOptimal || status == SolveStatus::kFeasible; }
};

// Minimizes program.objective' y subject to every constraint. Infeasibility
// and numerical trouble are reported through the status, not thrown.
SolveReport solve(const LmiProgram& program, const SolverOptions& options = {});

struct ConstraintMargin {
  std::string label;
  double min_eigenvalue = 0.0;  // of the constraint in G(y) >= 0 form
  bool flagged = false;         // min_eigenvalue < -margin_tol
};

// Recomputes every constraint at y with a dense symmetric eigensolver.
std::vector<ConstraintMargin> verify_solution(const LmiProgram& program,
                                              const Vector& y,
                                              double margin_tol = 1e-7);

// Plain-text dump of the program:
//   sofsat-lmi 1
//   variables <k>
//   blocks <count>
//   objective <k values>
//   then per constraint: "block <j> <dim> <label>" followed by lines
//   "<var> <row> <col> <value>" (var 0 is the constant term, var i >= 1 is
//   y_{i-1}); entries are the lower triangle of G_j with G_j(y) >= 0.
void write_program_dump(const LmiProgram& program, std::ostream& out);

}  // namespace sofsat
