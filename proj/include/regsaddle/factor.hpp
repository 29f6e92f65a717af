#pragma once

// Sparse Cholesky and threshold-pivoted LDL^T with minimum-degree ordering.
//
// Both factorizations eliminate right-looking on an explicit active matrix,
// so the pivot sequence can deviate from the analyzed order: LDL^T may delay
// a small pivot to the end or pair it into a 2x2 block. The permutation
// stored in a factor is the order actually used, i.e. P S P^T = L D L^T with
// (P S P^T)(a, b) = S(perm[a], perm[b]).

#include <span>
#include <vector>

#include "regsaddle/sparse.hpp"

namespace regsaddle {

struct CholFactor {
  SparseMatrix L;  // lower triangular, positive diagonal, permuted coordinates
  Permutation perm;
  Index nnz_L = 0;
};

struct Inertia {
  Index negative = 0;
  Index zero = 0;
  Index positive = 0;
};

struct LdlFactor {
  SparseMatrix L;  // unit lower triangular (ones stored), permuted coordinates
  /// Diagonal of D.
  std::vector<double> d;
  /// offdiag[k] couples positions k and k+1 of a 2x2 block; zero otherwise.
  std::vector<double> offdiag;
  Permutation perm;
  double pivot_thr = 0.0;
  bool used_2x2 = false;
  Index delayed_pivots = 0;
  Index nnz_L = 0;

  Index size() const noexcept { return static_cast<Index>(d.size()); }
  Inertia inertia() const;
};

struct PivotPolicy {
  double threshold = 0.0;
  bool allow_2x2 = false;
};

/// Threshold rule used around the IPM: 0.1*min{delta, rho, 1e-4} with 1x1
/// pivots only. For the implicit normal-equations block, once
/// min{delta, rho} <= 1e-8 the threshold becomes 1e-6 and 2x2 pivots are
/// allowed.
PivotPolicy ldl_pivot_policy(double delta, double rho, bool implicit_normal_block);

/// Minimum-degree fill-reducing order on the pattern of a square symmetric
/// matrix (either storage). Ties go to the lower index.
Permutation analyze_order(const SparseMatrix& s);

/// Number of nonzeros (diagonal included) of the Cholesky factor of the
/// pattern of S under the given order, computed symbolically.
Index symbolic_factor_nnz(const SparseMatrix& s, const Permutation& order);

/// Throws NotPositiveDefinite(original index, pivot) on a pivot <= 0.
CholFactor cholesky(const SparseMatrix& s, const Permutation& order);
CholFactor cholesky(const SparseMatrix& s);

/// Throws PivotBreakdown when every remaining candidate fails the threshold
/// and no 2x2 block is admissible.
LdlFactor ldlt(const SparseMatrix& k, const Permutation& order, double pivot_thr,
               bool allow_2x2);
LdlFactor ldlt(const SparseMatrix& k, double pivot_thr, bool allow_2x2);

std::vector<double> solve_chol(const CholFactor& f, std::span<const double> b);
std::vector<double> solve_ldlt(const LdlFactor& f, std::span<const double> b);

/// |D|^{-1/2} L^{-1} P b. Requires a strictly diagonal D.
std::vector<double> ldlt_half_solve(const LdlFactor& f, std::span<const double> b);
/// P^T L^{-T} |D|^{-1/2} y. Requires a strictly diagonal D.
std::vector<double> ldlt_half_solve_transpose(const LdlFactor& f,
                                              std::span<const double> y);

}  // namespace regsaddle
