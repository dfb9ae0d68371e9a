#pragma once

#include <string>
#include <vector>

#include "sofsat/dar_model.hpp"
#include "sofsat/lmi.hpp"
#include "sofsat/sdp.hpp"

namespace sofsat {

enum class SynthesisStatus { kSuccess, kIterationLimit, kSolverFailure };

std::string to_string(SynthesisStatus status);

struct SynthesisOptions {
  int i_max = 50;
  double gamma = 1e-2;
  // Schur test passes when max-eig(Q - S R^-1 S') <= schur_tol * supply_scale.
  double schur_tol = 1e-7;
  // Relaxed programs keep lambda >= lambda_floor; only the sign of lambda
  // matters to the stopping rule.
  double lambda_floor = -1e-6;
  // Eigenvalue tolerance when re-verifying a solver point.
  double verify_tol = 1e-7;
  int well_posedness_grid = 5;
  // Variable box for Algorithm 1 solves; Algorithm 2 keeps solver.variable_bound.
  double feasibility_bound = 10.0;
  AssemblyOptions assembly;
  SolverOptions solver;
};

struct SynthesisResult {
  SynthesisStatus status = SynthesisStatus::kSolverFailure;
  Certificate cert;
  bool has_certificate = false;
  std::vector<double> lambda_history;
  std::vector<double> trace_history;
  int iterations = 0;
  double schur_margin = 0.0;
  double wall_time = 0.0;
  std::string message;

  bool ok() const { return status == SynthesisStatus::kSuccess; }
  // K = -R^{-1} S', recomputed from the certificate on every call.
  Matrix gain() const;
};

// -R^{-1} S' by Cholesky solve; throws InputError unless R > 0.
Matrix compute_gain(const Matrix& S, const Matrix& R);

// Throws InputError when the model fails the well-posedness scan.
SynthesisResult algorithm1(const DarModel& model, const SynthesisOptions& opts = {});

// Throws InputError unless seed.ok().
SynthesisResult algorithm2(const DarModel& model, const SynthesisResult& seed,
                           const SynthesisOptions& opts = {});

// Every constraint family re-evaluated for cert; relaxed adds lambda to the
// supply-rate block when cert carries one.
std::vector<ConstraintMargin> recheck_certificate(const DarModel& model,
                                                  const Certificate& cert,
                                                  const AssemblyOptions& opts,
                                                  double margin_tol);

struct EllipsoidMetrics {
  Vector semi_axes;  // ascending
  double max_radius = 0.0;
  double min_radius = 0.0;
  double log_det_Pinv = 0.0;
  // Area for n = 2, volume otherwise.
  double volume = 0.0;
  double trace = 0.0;
};

// Throws InputError unless P > 0.
EllipsoidMetrics ellipsoid_metrics(const Matrix& P);

// max_k a_k' P^{-1} a_k over the facets of X; <= 1 means eps(P,1) is inside X.
double ellipsoid_facet_ratio(const DarModel& model, const Matrix& P);

}  // namespace sofsat
