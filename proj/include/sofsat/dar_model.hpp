#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sofsat/affine.hpp"
#include "sofsat/polytope.hpp"
#include "sofsat/types.hpp"

namespace sofsat {

struct Dims {
  Index n = 0;       // states
  Index n_pi = 0;    // nonlinear vector pi
  Index n_pi_x = 0;  // leading state-only block of pi
  Index m = 0;       // saturated inputs
  Index p = 0;       // outputs
  Index l = 0;       // uncertain parameters
};

// c * prod_i x_i^powers[i]
struct Monomial {
  double coeff = 1.0;
  std::vector<int> powers;

  double evaluate(const Vector& x) const;
  std::string to_string() const;
};

// Reference evaluation of pi(x, u) used to cross-check DAR data.
class PiOracle {
 public:
  using Function = std::function<Vector(const Vector& x, const Vector& u)>;

  explicit PiOracle(Function f) : f_(std::move(f)) {}
  // One monomial per entry of pi.
  static PiOracle from_monomials(std::vector<Monomial> entries);

  Vector operator()(const Vector& x, const Vector& u) const { return f_(x, u); }
  const std::vector<Monomial>& monomials() const { return monomials_; }

 private:
  Function f_;
  std::vector<Monomial> monomials_;
};

// Raw plant data; DarModel validates it.
struct DarData {
  Dims dims;
  AffineMatrix A1, A2, A3;
  AffineMatrix Ups1, Ups2, Ups3;
  Matrix C1, C2;
  AffineMatrix Sigma1, Sigma2;  // empty when n_pi_x == 0
  Vector u_bar;
  Polytope X;
  Polytope D;
  std::optional<PiOracle> pi_oracle;
};

/// Uncertain rational plant in differential-algebraic form
///
///   xdot = A1 x + A2 pi + A3 sat(v)
///   0    = Ups1 x + Ups2 pi + Ups3 sat(v)
///   y    = C1 x + C2 pi
///
/// with every A/Ups/Sigma affine in (x, delta). Construction checks shapes,
/// saturation bounds and the polytope dimensions; it rejects the implicit
/// output loop that appears when both C2 and Ups3 are nonzero. Invertibility
/// of Ups2 is a separate sampled check (check_well_posedness).
class DarModel {
 public:
  explicit DarModel(DarData data);

  const Dims& dims() const { return d_.dims; }
  const DarData& data() const { return d_; }

  const AffineMatrix& A1() const { return d_.A1; }
  const AffineMatrix& A2() const { return d_.A2; }
  const AffineMatrix& A3() const { return d_.A3; }
  const AffineMatrix& Ups1() const { return d_.Ups1; }
  const AffineMatrix& Ups2() const { return d_.Ups2; }
  const AffineMatrix& Ups3() const { return d_.Ups3; }
  const AffineMatrix& Sigma1() const { return d_.Sigma1; }
  const AffineMatrix& Sigma2() const { return d_.Sigma2; }
  const Matrix& C1() const { return d_.C1; }
  const Matrix& C2() const { return d_.C2; }
  const Vector& u_bar() const { return d_.u_bar; }
  const Polytope& X() const { return d_.X; }
  const Polytope& D() const { return d_.D; }
  const std::optional<PiOracle>& pi_oracle() const { return d_.pi_oracle; }

  // pi depends on sat(v) only through Ups3.
  bool pi_depends_on_input() const { return !d_.Ups3.is_zero(); }

 private:
  DarData d_;
};

class WellPosednessError : public std::runtime_error {
 public:
  WellPosednessError(const std::string& what, Vector x, Vector delta,
                     double condition)
      : std::runtime_error(what),
        x(std::move(x)),
        delta(std::move(delta)),
        condition(condition) {}

  Vector x;
  Vector delta;
  double condition;
};

inline constexpr double kDefaultConditionCap = 1e8;

Vector saturate(const Vector& v, const Vector& u_bar);
// sat(v) - v
Vector deadzone(const Vector& v, const Vector& u_bar);

// pi = -Ups2^{-1} (Ups1 x + Ups3 u_sat); throws WellPosednessError when the
// 1-norm condition number of Ups2 exceeds cond_cap.
Vector recover_pi(const DarModel& model, const Vector& x, const Vector& delta,
                  const Vector& u_sat, double cond_cap = kDefaultConditionCap);

// All signals of the saturated closed loop at one (x, delta).
struct LoopSignals {
  Vector x_dot;
  Vector y;
  Vector v;
  Vector u;  // sat(v)
  Vector pi;
  bool saturated = false;
};

LoopSignals closed_loop(const DarModel& model, const Matrix& K, const Vector& x,
                        const Vector& delta,
                        double cond_cap = kDefaultConditionCap);

Vector closed_loop_derivative(const DarModel& model, const Matrix& K,
                              const Vector& x, const Vector& delta,
                              double cond_cap = kDefaultConditionCap);

struct WellPosednessReport {
  bool pass = true;
  size_t points_checked = 0;
  double worst_condition = 1.0;
  Vector worst_x;
  Vector worst_delta;
  std::string message;
};

// Checks Ups2 (and Sigma2 when n_pi_x > 0) at every vertex of X x D and on a
// grid of grid_per_axis points per coordinate of the bounding box, keeping
// grid points inside the polytopes. Sampling based, not exhaustive.
WellPosednessReport check_well_posedness(const DarModel& model,
                                         int grid_per_axis = 5,
                                         double cond_cap = kDefaultConditionCap);

struct ResidualSample {
  Vector x;
  Vector delta;
  Vector u;
};

struct ResidualReport {
  size_t samples = 0;
  double max_constraint_residual = 0.0;  // |Ups1 x + Ups2 pi_o + Ups3 u|
  double max_pi_mismatch = 0.0;          // |pi_o - recover_pi|
  double max_null_residual = 0.0;        // |Sigma1 x + Sigma2 pi_x|
  double max_residual() const;
};

// Throws InputError when the model has no pi oracle.
ResidualReport residual_check(const DarModel& model,
                              const std::vector<ResidualSample>& samples);

// Uniform samples in X x D with inputs inside the saturation limits.
std::vector<ResidualSample> random_residual_samples(const DarModel& model,
                                                    size_t count,
                                                    uint64_t seed);

}  // namespace sofsat
