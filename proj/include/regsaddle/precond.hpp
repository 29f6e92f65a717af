#pragma once

// Preconditioners for the regularized normal equations M = A G A^T + delta I
// and for the saddle-point matrix K.
//
//   pne-chol  block-diagonal Cholesky preconditioner with dropped columns of A
//             and sparsified rows of M
//   pne-ldl   the same operator with only the N columns dropped, applied
//             implicitly through an LDL^T of the kept saddle block
//   pas-*     blockdiag(Qhat + rho I, P_NE) for MINRES on K
//   pk        Lhat |Dhat| Lhat^T from an LDL^T of the sparsified K

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "regsaddle/factor.hpp"
#include "regsaddle/sparse.hpp"

namespace regsaddle {

struct Partition {
  std::vector<Index> basic;      // B
  std::vector<Index> nonbasic;   // N
  std::vector<Index> undecided;  // U
};

/// j in N iff g_j <= kappa*mu, j in B iff g_j >= 1/(kappa*mu), else U.
/// When the two thresholds cross (kappa*mu >= 1) every index goes to U.
Partition partition_variables(std::span<const double> g, double mu, double kappa);

struct DensityPlan {
  std::vector<Index> dense_cols;  // densest first, ties by lower index
  std::vector<Index> dense_rows;
};

/// Columns with at least col_density*m stored entries (at most max_drop of
/// them) and rows with at least row_density*n stored entries.
DensityPlan density_plan(const SparseMatrix& a, double col_density, double row_density,
                         Index max_drop);

struct SparsificationPlan {
  std::vector<Index> drop_cols;      // every column of A zeroed in the preconditioner
  std::vector<Index> dense_cols;     // the density-selected subset of drop_cols
  std::vector<Index> sparsify_rows;  // rows of M whose coupling is dropped
  Permutation perm_c;                // dropped columns first
  Permutation perm_r;                // sparsified rows first
  Partition partition;

  Index kc() const noexcept { return static_cast<Index>(drop_cols.size()); }
  Index kr() const noexcept { return static_cast<Index>(sparsify_rows.size()); }
  /// Columns kept, ascending.
  std::vector<Index> kept_cols() const;
  /// Rows not sparsified, ascending.
  std::vector<Index> kept_rows() const;
};

/// Builds the permutations from the dropped columns and sparsified rows.
/// Duplicates are removed; order of first appearance is kept.
SparsificationPlan make_plan(Index m, Index n, std::vector<Index> drop_cols,
                             std::vector<Index> sparsify_rows,
                             std::vector<Index> dense_cols = {}, Partition partition = {});

enum class HessianMode {
  diag_all,             // Diag(Q)
  diag_on_n_full_on_b,  // Diag on the dropped block, Q kept on the rest
  block_diag_custom,    // both diagonal blocks kept, coupling zeroed
};

struct HessianApprox {
  SparseMatrix qhat;  // symmetric_lower, without the rho shift
  HessianMode mode = HessianMode::diag_all;
  double rho = 0.0;
  bool kept_block_exact = true;  // qhat equals Q on the kept principal block
  bool coupling_dropped = false;  // some nonzero entry of Q touching a dropped column was removed
};

/// Approximates Q = H + Diag(theta_inv) per mode, with no coupling between
/// plan.drop_cols and the kept columns.
HessianApprox sparsify_hessian(const SparseMatrix& h, std::span<const double> theta_inv,
                               double rho, const SparsificationPlan& plan, HessianMode mode);

enum class PrecondKind { pne_chol, pne_ldl, pas_chol, pas_ldl, pk };

const char* to_string(PrecondKind k);
/// Accepts "pne-chol", "pne-ldl", "pas-chol", "pas-ldl", "pk".
PrecondKind parse_precond_kind(const std::string& s);

struct PrecondTheory {
  Index kc = 0;
  Index kr = 0;
  Index guaranteed_unit = 0;  // eigenvalues guaranteed at 1 (or at +-1 for pk)
};

struct PneCholData {
  Index m = 0;
  std::vector<Index> rows_r;  // sparsified rows
  std::vector<Index> rows_s;  // remaining rows
  CholFactor m11;
  CholFactor m22;
};

struct PneLdlData {
  Index m = 0;
  Index nb = 0;  // kept columns
  LdlFactor kb;
};

class PrecondHandle;

struct PasData {
  Index n = 0;
  CholFactor fhat;
  std::shared_ptr<const PrecondHandle> ne;
};

struct PkData {
  Index n = 0;
  Index m = 0;
  LdlFactor khat;
};

class PrecondHandle {
 public:
  using Data = std::variant<PneCholData, PneLdlData, PasData, PkData>;

  PrecondHandle(PrecondKind kind, Data data, SparsificationPlan plan, PrecondTheory theory);

  PrecondKind kind() const noexcept { return kind_; }
  const SparsificationPlan& plan() const noexcept { return plan_; }
  const PrecondTheory& theory() const noexcept { return theory_; }
  const Data& data() const noexcept { return data_; }

  /// m for pne-*, n+m for pas-* and pk.
  Index dim() const;
  /// Stored entries of every factor the handle owns (diagonals included).
  Index factor_nnz() const;

 private:
  PrecondKind kind_;
  Data data_;
  SparsificationPlan plan_;
  PrecondTheory theory_;
};

/// P^{-1} r.
std::vector<double> apply_inverse(const PrecondHandle& h, std::span<const double> r);

/// Cholesky-based P_NE for A Diag(ghat) A^T + delta I.
PrecondHandle build_pne_chol(const SparseMatrix& a, std::span<const double> ghat,
                             double delta, const SparsificationPlan& plan);

/// Implicit P_NE with every column in plan.drop_cols removed. Q = H +
/// Diag(theta_inv); only its kept principal block is used. The plan must not
/// sparsify rows.
PrecondHandle build_pne_ldl(const SparseMatrix& a, const SparseMatrix& h,
                            std::span<const double> theta_inv, double rho, double delta,
                            const SparsificationPlan& plan);

/// blockdiag(qhat + rho I, P_NE).
PrecondHandle build_pas(const HessianApprox& qhat, std::shared_ptr<const PrecondHandle> ne);

/// LDL^T (1x1 pivots only) of [-(qhat + rho I), Ahat^T; Ahat, delta I] where
/// Ahat has plan.drop_cols zeroed. Throws PivotBreakdown on failure.
PrecondHandle build_pk(const SparseMatrix& a, const HessianApprox& qhat, double delta,
                       const SparsificationPlan& plan);

/// P_K^{-1} K P_K^{-T} v for P_K = Perm^T Lhat |Dhat|^{1/2}.
std::vector<double> pk_two_sided(const PrecondHandle& h, const SparseMatrix& k,
                                 std::span<const double> v);

}  // namespace regsaddle
