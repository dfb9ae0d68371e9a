#pragma once

#include <vector>

#include "sofsat/types.hpp"

namespace sofsat {

/// Matrix-valued function M(x, delta) = M0 + sum_i x_i Mx_i + sum_j delta_j Md_j.
///
/// The number of state coefficients fixes the state dimension n and the number
/// of uncertainty coefficients fixes l. All coefficients share one shape.
class AffineMatrix {
 public:
  AffineMatrix() = default;
  AffineMatrix(Matrix const_term, std::vector<Matrix> x_coeffs,
               std::vector<Matrix> delta_coeffs);

  static AffineMatrix constant(const Matrix& value, Index n, Index l);
  static AffineMatrix zero(Index rows, Index cols, Index n, Index l);

  Index rows() const { return const_term_.rows(); }
  Index cols() const { return const_term_.cols(); }
  Index num_states() const { return static_cast<Index>(x_coeffs_.size()); }
  Index num_params() const { return static_cast<Index>(delta_coeffs_.size()); }

  const Matrix& const_term() const { return const_term_; }
  const Matrix& x_coeff(Index i) const { return x_coeffs_.at(i); }
  const Matrix& delta_coeff(Index j) const { return delta_coeffs_.at(j); }
  const std::vector<Matrix>& x_coeffs() const { return x_coeffs_; }
  const std::vector<Matrix>& delta_coeffs() const { return delta_coeffs_; }

  // Throws InputError when len(x) != n or len(delta) != l.
  Matrix evaluate(const Vector& x, const Vector& delta) const;

  // True when every x/delta coefficient is exactly zero.
  bool is_constant() const;
  bool is_zero() const;

  AffineMatrix operator-() const;
  AffineMatrix transpose() const;

 private:
  Matrix const_term_;
  std::vector<Matrix> x_coeffs_;
  std::vector<Matrix> delta_coeffs_;
};

}  // namespace sofsat
