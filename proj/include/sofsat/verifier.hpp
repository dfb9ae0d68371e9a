#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sofsat/dar_model.hpp"
#include "sofsat/lmi.hpp"
#include "sofsat/simulate.hpp"

namespace sofsat {

struct CheckResult {
  std::string name;
  size_t samples = 0;
  double worst_margin = 0.0;  // negative means violated
  bool pass = false;
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> checks;
  uint64_t seed = 0;
  bool pass = false;

  const CheckResult* find(const std::string& name) const;
};

struct VerifierOptions {
  uint64_t seed = 1;
  size_t sector_samples = 10000;
  size_t vdot_samples = 10000;
  size_t supply_samples = 1000;
  size_t interior_samples = 1000;
  size_t trajectories = 100;
  double t_final = 50.0;
  double step = 1e-2;
  double convergence_radius = 1e-3;
  // Eigenvalue tolerance of the vertex recheck.
  double margin_tol = 1e-7;
  double schur_tol = 1e-7;
  AssemblyOptions assembly;
};

// Uniform directions mapped through P^{-1/2}: points with x'Px = 1.
std::vector<Vector> ellipsoid_boundary_samples(const Matrix& P, size_t count,
                                               std::mt19937_64& rng);
// Points drawn uniformly from {x : x'Px <= 1}.
std::vector<Vector> ellipsoid_interior_samples(const Matrix& P, size_t count,
                                               std::mt19937_64& rng);

// |G_i x + Gpi_i pi_x| <= u_bar_i + 1e-8 on the boundary of eps(P,1), with
// G = W^{-1} Gbar and delta at the vertices of D. Margin is u_bar_i - |.|.
CheckResult check_sector_inclusion(const DarModel& model, const Certificate& cert,
                                   size_t n_samples, uint64_t seed);

// Vdot + x'Nx + B <= r and Vdot < 0 inside eps(P,1). Margins are divided by
// |x|^2; the strict part ignores |x| below 1e-6 times the largest semi-axis.
CheckResult check_vdot(const DarModel& model, const Certificate& cert, const Matrix& K,
                       size_t n_samples, uint64_t seed);

// r(y, Ky) <= 1e-10 * scale on random unit y; margin is -r.
CheckResult check_supply_rate_sign(const Certificate& cert, const Matrix& K,
                                   size_t n_samples, uint64_t seed);

// Every trajectory from the boundary of eps(P,1) must end with
// |x(t_final)| <= convergence_radius, for each delta generator (a single
// run with delta = 0 when l = 0).
CheckResult monte_carlo_roa(const DarModel& model, const Matrix& K, const Matrix& P,
                            size_t n_traj, double t_final, uint64_t seed,
                            double step = 1e-2, double convergence_radius = 1e-3);

// Dissipativity and sector blocks evaluated at random interior (x, delta);
// margin is the smallest eigenvalue with the inequality's sign.
CheckResult check_vertex_sufficiency(const DarModel& model, const Certificate& cert,
                                     size_t n_samples, uint64_t seed);

// All checks on one certificate with the gain K actually applied.
VerificationReport verify_certificate(const DarModel& model, const Certificate& cert,
                                      const Matrix& K, const VerifierOptions& opts = {});

}  // namespace sofsat
