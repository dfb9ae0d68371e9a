#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sofsat/types.hpp"

namespace sofsat {

enum class BlockStructure { kSymmetric, kFull, kDiagonal };

struct DecisionBlock {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  BlockStructure structure = BlockStructure::kFull;
  Index offset = 0;  // first scalar variable
  Index count = 0;   // number of scalar variables
};

// Named matrix-valued decision blocks laid out over one scalar vector y.
//
// Symmetric blocks own their lower triangle (column-major, i >= j), diagonal
// blocks own their diagonal, full blocks are column-major.
class DecisionRegistry {
 public:
  Index add(std::string name, Index rows, Index cols, BlockStructure structure);

  Index num_variables() const { return num_variables_; }
  const std::vector<DecisionBlock>& blocks() const { return blocks_; }
  const DecisionBlock& block(Index id) const { return blocks_.at(static_cast<size_t>(id)); }
  std::optional<Index> find(const std::string& name) const;

  // Coefficient matrix of the k-th scalar of a block.
  Matrix basis(Index id, Index k) const;
  Matrix value(Index id, const Vector& y) const;
  // Writes a block value into y; symmetric blocks are symmetrized first and
  // diagonal blocks keep only their diagonal.
  void set_value(Index id, const Matrix& value, Vector& y) const;
  // Owning block and scalar position for a variable index.
  std::pair<Index, Index> locate(Index var) const;

 private:
  std::vector<DecisionBlock> blocks_;
  Index num_variables_ = 0;
};

// Matrix-valued affine function of the decision vector: C + sum_k y_k F_k.
class LinearTerm {
 public:
  LinearTerm() = default;
  LinearTerm(Index rows, Index cols);

  static LinearTerm constant(Matrix value);
  static LinearTerm variable(const DecisionRegistry& reg, Index block);

  Index rows() const { return constant_.rows(); }
  Index cols() const { return constant_.cols(); }
  const Matrix& constant_part() const { return constant_; }
  const std::map<Index, Matrix>& coefficients() const { return coeffs_; }

  LinearTerm transpose() const;
  LinearTerm block(Index r0, Index c0, Index rows, Index cols) const;
  // Zero matrix of the given size holding this term at (r0, c0).
  LinearTerm embed(Index rows, Index cols, Index r0, Index c0) const;
  // Square term with its strict upper triangle overwritten by the lower one.
  LinearTerm mirrored_lower() const;
  // A 1x1 term times a constant matrix.
  LinearTerm scalar_times(const Matrix& m) const;

  Matrix evaluate(const Vector& y) const;

  LinearTerm& operator+=(const LinearTerm& other);
  LinearTerm& operator-=(const LinearTerm& other);
  LinearTerm& operator*=(double s);

  friend LinearTerm operator+(LinearTerm a, const LinearTerm& b) { return a += b; }
  friend LinearTerm operator-(LinearTerm a, const LinearTerm& b) { return a -= b; }
  friend LinearTerm operator-(LinearTerm a) { return a *= -1.0; }
  friend LinearTerm operator*(double s, LinearTerm a) { return a *= s; }
  friend LinearTerm operator*(const Matrix& left, const LinearTerm& t);
  friend LinearTerm operator*(const LinearTerm& t, const Matrix& right);

 private:
  Matrix constant_;
  std::map<Index, Matrix> coeffs_;
};

// Square expression that is exactly symmetric by construction: diagonal
// blocks are mirrored from their lower triangle and off-diagonal blocks are
// written together with their transpose.
class LinearMatrixExpression {
 public:
  LinearMatrixExpression() = default;
  explicit LinearMatrixExpression(Index dim);

  Index dim() const { return term_.rows(); }
  const LinearTerm& term() const { return term_; }

  void add_diagonal_block(Index r0, const LinearTerm& t);
  // t lands at (r0, c0) and t' at (c0, r0); the two blocks must not overlap.
  void add_off_diagonal_block(Index r0, Index c0, const LinearTerm& t);
  // Adds t + t' over the whole matrix.
  void add_he(const LinearTerm& t);
  void add_identity(double s);

  Matrix evaluate(const Vector& y) const { return term_.evaluate(y); }

  LinearMatrixExpression& operator*=(double s) {
    term_ *= s;
    return *this;
  }
  LinearMatrixExpression& operator+=(const LinearMatrixExpression& o);

 private:
  LinearTerm term_;
};

}  // namespace sofsat
