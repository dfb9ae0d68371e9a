#include "sofsat/affine.hpp"

#include <sstream>

namespace sofsat {

namespace {

void check_shape(const Matrix& m, Index rows, Index cols, const char* what,
                 size_t k) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << "affine matrix: " << what << " coefficient " << k << " is "
        << m.rows() << "x" << m.cols() << ", expected " << rows << "x" << cols;
    throw InputError(msg.str());
  }
}

}  // namespace

AffineMatrix::AffineMatrix(Matrix const_term, std::vector<Matrix> x_coeffs,
                           std::vector<Matrix> delta_coeffs)
    : const_term_(std::move(const_term)),
      x_coeffs_(std::move(x_coeffs)),
      delta_coeffs_(std::move(delta_coeffs)) {
  for (size_t k = 0; k < x_coeffs_.size(); ++k)
    check_shape(x_coeffs_[k], rows(), cols(), "state", k);
  for (size_t k = 0; k < delta_coeffs_.size(); ++k)
    check_shape(delta_coeffs_[k], rows(), cols(), "uncertainty", k);
}

AffineMatrix AffineMatrix::constant(const Matrix& value, Index n, Index l) {
  return AffineMatrix(value,
                      std::vector<Matrix>(n, Matrix::Zero(value.rows(), value.cols())),
                      std::vector<Matrix>(l, Matrix::Zero(value.rows(), value.cols())));
}

AffineMatrix AffineMatrix::zero(Index rows, Index cols, Index n, Index l) {
  return constant(Matrix::Zero(rows, cols), n, l);
}

Matrix AffineMatrix::evaluate(const Vector& x, const Vector& delta) const {
  if (x.size() != num_states() || delta.size() != num_params()) {
    std::ostringstream msg;
    msg << "affine matrix: evaluated with |x|=" << x.size()
        << ", |delta|=" << delta.size() << " but expects n=" << num_states()
        << ", l=" << num_params();
    throw InputError(msg.str());
  }
  Matrix out = const_term_;
  for (Index i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) out.noalias() += x[i] * x_coeffs_[i];
  for (Index j = 0; j < delta.size(); ++j)
    if (delta[j] != 0.0) out.noalias() += delta[j] * delta_coeffs_[j];
  return out;
}

bool AffineMatrix::is_constant() const {
  for (const auto& c : x_coeffs_)
    if (!c.isZero(0.0)) return false;
  for (const auto& c : delta_coeffs_)
    if (!c.isZero(0.0)) return false;
  return true;
}

bool AffineMatrix::is_zero() const {
  return const_term_.isZero(0.0) && is_constant();
}

AffineMatrix AffineMatrix::operator-() const {
  AffineMatrix out = *this;
  out.const_term_ = -out.const_term_;
  for (auto& c : out.x_coeffs_) c = -c;
  for (auto& c : out.delta_coeffs_) c = -c;
  return out;
}

AffineMatrix AffineMatrix::transpose() const {
  std::vector<Matrix> xs, ds;
  for (const auto& c : x_coeffs_) xs.push_back(c.transpose());
  for (const auto& c : delta_coeffs_) ds.push_back(c.transpose());
  return AffineMatrix(const_term_.transpose(), std::move(xs), std::move(ds));
}

}  // namespace sofsat
