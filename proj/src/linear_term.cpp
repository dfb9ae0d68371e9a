#include "sofsat/linear_term.hpp"

namespace sofsat {

namespace {

void mirror_lower(Matrix& m) {
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
}

}  // namespace

Index DecisionRegistry::add(std::string name, Index rows, Index cols,
                            BlockStructure structure) {
  if (rows < 0 || cols < 0) throw InputError("registry: negative block size");
  if (find(name)) throw InputError("registry: duplicate block '" + name + "'");
  if (structure != BlockStructure::kFull && rows != cols)
    throw InputError("registry: block '" + name + "' must be square");
  DecisionBlock b;
  b.name = std::move(name);
  b.rows = rows;
  b.cols = cols;
  b.structure = structure;
  b.offset = num_variables_;
  switch (structure) {
    case BlockStructure::kSymmetric: b.count = rows * (rows + 1) / 2; break;
    case BlockStructure::kDiagonal: b.count = rows; break;
    case BlockStructure::kFull: b.count = rows * cols; break;
  }
  num_variables_ += b.count;
  blocks_.push_back(std::move(b));
  return static_cast<Index>(blocks_.size()) - 1;
}

std::optional<Index> DecisionRegistry::find(const std::string& name) const {
  for (size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name == name) return static_cast<Index>(i);
  return std::nullopt;
}

Matrix DecisionRegistry::basis(Index id, Index k) const {
  const DecisionBlock& b = block(id);
  Matrix e = Matrix::Zero(b.rows, b.cols);
  switch (b.structure) {
    case BlockStructure::kFull:
      e(k % b.rows, k / b.rows) = 1.0;
      break;
    case BlockStructure::kDiagonal:
      e(k, k) = 1.0;
      break;
    case BlockStructure::kSymmetric: {
      Index j = 0, rem = k;
      while (rem >= b.rows - j) {
        rem -= b.rows - j;
        ++j;
      }
      const Index i = j + rem;
      e(i, j) = 1.0;
      e(j, i) = 1.0;
      break;
    }
  }
  return e;
}

Matrix DecisionRegistry::value(Index id, const Vector& y) const {
  const DecisionBlock& b = block(id);
  Matrix v = Matrix::Zero(b.rows, b.cols);
  Index k = b.offset;
  switch (b.structure) {
    case BlockStructure::kFull:
      for (Index j = 0; j < b.cols; ++j)
        for (Index i = 0; i < b.rows; ++i) v(i, j) = y[k++];
      break;
    case BlockStructure::kDiagonal:
      for (Index i = 0; i < b.rows; ++i) v(i, i) = y[k++];
      break;
    case BlockStructure::kSymmetric:
      for (Index j = 0; j < b.cols; ++j)
        for (Index i = j; i < b.rows; ++i) {
          v(i, j) = y[k];
          v(j, i) = y[k];
          ++k;
        }
      break;
  }
  return v;
}

void DecisionRegistry::set_value(Index id, const Matrix& value, Vector& y) const {
  const DecisionBlock& b = block(id);
  if (value.rows() != b.rows || value.cols() != b.cols)
    throw InputError("registry: value for '" + b.name + "' has wrong shape");
  if (y.size() != num_variables_) y.conservativeResize(num_variables_);
  Index k = b.offset;
  switch (b.structure) {
    case BlockStructure::kFull:
      for (Index j = 0; j < b.cols; ++j)
        for (Index i = 0; i < b.rows; ++i) y[k++] = value(i, j);
      break;
    case BlockStructure::kDiagonal:
      for (Index i = 0; i < b.rows; ++i) y[k++] = value(i, i);
      break;
    case BlockStructure::kSymmetric:
      for (Index j = 0; j < b.cols; ++j)
        for (Index i = j; i < b.rows; ++i)
          y[k++] = 0.5 * (value(i, j) + value(j, i));
      break;
  }
}

std::pair<Index, Index> DecisionRegistry::locate(Index var) const {
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    if (var >= b.offset && var < b.offset + b.count)
      return {static_cast<Index>(i), var - b.offset};
  }
  throw InputError("registry: variable index out of range");
}

LinearTerm::LinearTerm(Index rows, Index cols) : constant_(Matrix::Zero(rows, cols)) {}

LinearTerm LinearTerm::constant(Matrix value) {
  LinearTerm t;
  t.constant_ = std::move(value);
  return t;
}

LinearTerm LinearTerm::variable(const DecisionRegistry& reg, Index id) {
  const DecisionBlock& b = reg.block(id);
  LinearTerm t(b.rows, b.cols);
  for (Index k = 0; k < b.count; ++k) t.coeffs_.emplace(b.offset + k, reg.basis(id, k));
  return t;
}

LinearTerm LinearTerm::transpose() const {
  LinearTerm t = LinearTerm::constant(constant_.transpose());
  for (const auto& [k, c] : coeffs_) t.coeffs_.emplace(k, c.transpose());
  return t;
}

LinearTerm LinearTerm::block(Index r0, Index c0, Index rows, Index cols) const {
  LinearTerm t = LinearTerm::constant(constant_.block(r0, c0, rows, cols));
  for (const auto& [k, c] : coeffs_) {
    Matrix sub = c.block(r0, c0, rows, cols);
    if (!sub.isZero(0.0)) t.coeffs_.emplace(k, std::move(sub));
  }
  return t;
}

LinearTerm LinearTerm::embed(Index rows, Index cols, Index r0, Index c0) const {
  LinearTerm t(rows, cols);
  t.constant_.block(r0, c0, this->rows(), this->cols()) = constant_;
  for (const auto& [k, c] : coeffs_) {
    Matrix big = Matrix::Zero(rows, cols);
    big.block(r0, c0, c.rows(), c.cols()) = c;
    t.coeffs_.emplace(k, std::move(big));
  }
  return t;
}

LinearTerm LinearTerm::mirrored_lower() const {
  LinearTerm t = *this;
  mirror_lower(t.constant_);
  for (auto& [k, c] : t.coeffs_) mirror_lower(c);
  return t;
}

LinearTerm LinearTerm::scalar_times(const Matrix& m) const {
  if (rows() != 1 || cols() != 1)
    throw InputError("linear term: scalar_times needs a 1x1 term");
  LinearTerm t = LinearTerm::constant(constant_(0, 0) * m);
  for (const auto& [k, c] : coeffs_) t.coeffs_.emplace(k, c(0, 0) * m);
  return t;
}

Matrix LinearTerm::evaluate(const Vector& y) const {
  Matrix v = constant_;
  for (const auto& [k, c] : coeffs_) v.noalias() += y[k] * c;
  return v;
}

LinearTerm& LinearTerm::operator+=(const LinearTerm& o) {
  if (o.rows() != rows() || o.cols() != cols())
    throw InputError("linear term: shape mismatch in sum");
  constant_ += o.constant_;
  for (const auto& [k, c] : o.coeffs_) {
    auto it = coeffs_.find(k);
    if (it == coeffs_.end()) coeffs_.emplace(k, c);
    else it->second += c;
  }
  return *this;
}

LinearTerm& LinearTerm::operator-=(const LinearTerm& o) {
  return *this += (-1.0) * o;
}

LinearTerm& LinearTerm::operator*=(double s) {
  constant_ *= s;
  for (auto& [k, c] : coeffs_) c *= s;
  return *this;
}

LinearTerm operator*(const Matrix& left, const LinearTerm& t) {
  if (left.cols() != t.rows()) throw InputError("linear term: shape mismatch in product");
  LinearTerm out = LinearTerm::constant(left * t.constant_);
  for (const auto& [k, c] : t.coeffs_) {
    Matrix p = left * c;
    if (!p.isZero(0.0)) out.coeffs_.emplace(k, std::move(p));
  }
  return out;
}

LinearTerm operator*(const LinearTerm& t, const Matrix& right) {
  if (t.cols() != right.rows()) throw InputError("linear term: shape mismatch in product");
  LinearTerm out = LinearTerm::constant(t.constant_ * right);
  for (const auto& [k, c] : t.coeffs_) {
    Matrix p = c * right;
    if (!p.isZero(0.0)) out.coeffs_.emplace(k, std::move(p));
  }
  return out;
}

LinearMatrixExpression::LinearMatrixExpression(Index dim) : term_(dim, dim) {}

void LinearMatrixExpression::add_diagonal_block(Index r0, const LinearTerm& t) {
  if (t.rows() != t.cols()) throw InputError("expression: diagonal block must be square");
  term_ += t.mirrored_lower().embed(dim(), dim(), r0, r0);
}

void LinearMatrixExpression::add_off_diagonal_block(Index r0, Index c0,
                                                    const LinearTerm& t) {
  const bool overlap = r0 < c0 + t.cols() && c0 < r0 + t.rows();
  if (overlap) throw InputError("expression: off-diagonal block overlaps its mirror");
  term_ += t.embed(dim(), dim(), r0, c0);
  term_ += t.transpose().embed(dim(), dim(), c0, r0);
}

void LinearMatrixExpression::add_he(const LinearTerm& t) {
  if (t.rows() != dim() || t.cols() != dim())
    throw InputError("expression: He{} term has wrong shape");
  term_ += t;
  term_ += t.transpose();
}

void LinearMatrixExpression::add_identity(double s) {
  term_ += LinearTerm::constant(s * Matrix::Identity(dim(), dim()));
}

LinearMatrixExpression& LinearMatrixExpression::operator+=(
    const LinearMatrixExpression& o) {
  term_ += o.term_;
  return *this;
}

}  // namespace sofsat
