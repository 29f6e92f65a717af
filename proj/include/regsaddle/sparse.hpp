#pragma once

// Compressed sparse column storage and the kernels the rest of the library
// builds on. Matrices are immutable once constructed.

#include <span>
#include <vector>

#include "regsaddle/errors.hpp"

namespace regsaddle {

enum class Symmetry { general, symmetric_lower };

struct Triplet {
  Index row;
  Index col;
  double value;
};

class SparseMatrix {
 public:
  /// 0x0 matrix.
  SparseMatrix() : col_ptr_{0} {}

  /// Takes ownership of CSC arrays and validates every structural invariant:
  /// monotone col_ptr, strictly increasing in-range row indices, and for
  /// symmetric_lower a square shape with no entry above the diagonal.
  SparseMatrix(Index nrows, Index ncols, std::vector<Index> col_ptr,
               std::vector<Index> row_idx, std::vector<double> values,
               Symmetry symmetry = Symmetry::general);

  /// Duplicates are summed. For symmetric_lower, entries given in the upper
  /// triangle are mirrored into the lower one. Explicit zeros are kept.
  static SparseMatrix from_triplets(Index nrows, Index ncols,
                                    std::span<const Triplet> triplets,
                                    Symmetry symmetry = Symmetry::general);
  static SparseMatrix identity(Index n);
  static SparseMatrix diagonal(std::span<const double> d);
  static SparseMatrix zero(Index nrows, Index ncols,
                           Symmetry symmetry = Symmetry::general);

  Index nrows() const noexcept { return nrows_; }
  Index ncols() const noexcept { return ncols_; }
  Index nnz() const noexcept { return static_cast<Index>(values_.size()); }
  Symmetry symmetry() const noexcept { return symmetry_; }
  bool is_symmetric() const noexcept {
    return symmetry_ == Symmetry::symmetric_lower;
  }

  std::span<const Index> col_ptr() const noexcept { return col_ptr_; }
  std::span<const Index> row_idx() const noexcept { return row_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const Index> col_rows(Index j) const noexcept {
    return {row_idx_.data() + col_ptr_[j],
            static_cast<std::size_t>(col_ptr_[j + 1] - col_ptr_[j])};
  }
  std::span<const double> col_values(Index j) const noexcept {
    return {values_.data() + col_ptr_[j],
            static_cast<std::size_t>(col_ptr_[j + 1] - col_ptr_[j])};
  }

  /// Entry (i, j); symmetric_lower answers for both triangles.
  double coeff(Index i, Index j) const;

  /// Stored diagonal (zeros where absent). Requires a square matrix.
  std::vector<double> diagonal_values() const;

  /// True when every stored entry is on the diagonal.
  bool is_structurally_diagonal() const;

  SparseMatrix transpose() const;

  /// Full general storage of the represented operator.
  SparseMatrix expand_symmetric() const;

  /// Row-major dense copy of the represented operator (desk-scale use).
  std::vector<double> to_dense() const;

 private:
  Index nrows_ = 0;
  Index ncols_ = 0;
  std::vector<Index> col_ptr_;
  std::vector<Index> row_idx_;
  std::vector<double> values_;
  Symmetry symmetry_ = Symmetry::general;
};

/// forward[k] is the original index placed at position k.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<Index> forward);
  static Permutation identity(Index n);

  Index size() const noexcept { return static_cast<Index>(forward_.size()); }
  std::span<const Index> forward() const noexcept { return forward_; }
  Index operator[](Index k) const noexcept { return forward_[k]; }

  Permutation inverse() const;
  /// (this ∘ other): position k holds other[this[k]].
  Permutation compose(const Permutation& other) const;

  /// y[k] = x[forward[k]].
  std::vector<double> apply(std::span<const double> x) const;
  /// x[forward[k]] = y[k].
  std::vector<double> apply_inverse(std::span<const double> y) const;

  bool operator==(const Permutation&) const = default;

 private:
  std::vector<Index> forward_;
};

/// A*x, or A^T*x when transpose is set. Symmetric-lower matrices act as the
/// full symmetric operator.
std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x,
                         bool transpose = false);

/// m x |cols| submatrix with columns in the given order.
SparseMatrix extract_columns(const SparseMatrix& a, std::span<const Index> cols);

/// |rows| x |cols| submatrix of a general matrix; row order follows `rows`.
SparseMatrix extract_submatrix(const SparseMatrix& a, std::span<const Index> rows,
                               std::span<const Index> cols);

/// Principal submatrix S(idx, idx) of a symmetric_lower matrix, kept
/// symmetric_lower in the order given by idx.
SparseMatrix extract_principal(const SparseMatrix& s, std::span<const Index> idx);

/// Symmetric permutation P S P^T of a symmetric_lower matrix.
SparseMatrix permute_symmetric(const SparseMatrix& s, const Permutation& p);

/// A Diag(g) A^T + delta I, symmetric_lower.
SparseMatrix normal_matrix(const SparseMatrix& a, std::span<const double> g,
                           double delta);

/// alpha*S + Diag(d) for a symmetric_lower S (d may be empty for "no shift").
SparseMatrix add_diagonal(const SparseMatrix& s, std::span<const double> d,
                          double alpha = 1.0);

struct NnzProfile {
  std::vector<Index> col_counts;
  std::vector<Index> row_counts;
};

/// Structural counts of the stored entries (stored zeros count).
NnzProfile nnz_profile(const SparseMatrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace regsaddle
