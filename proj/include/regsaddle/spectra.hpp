#pragma once

// Dense eigenvalue checks of the preconditioned operators against the
// interval theorems. Meant for small instances only.

#include <string>
#include <vector>

#include "regsaddle/precond.hpp"
#include "regsaddle/sparse.hpp"

namespace regsaddle {

/// Ascending eigenvalues of a dense symmetric matrix given row-major.
/// Throws DimensionError above order 500.
std::vector<double> dense_eigs(const std::vector<double>& s, Index dim);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SpectralReport {
  std::string label;
  std::vector<double> eigenvalues;  // ascending
  std::vector<Interval> intervals;  // one, or two for the saddle-point check
  Index unit_count = 0;
  Index guaranteed_unit_count = 0;
  bool pass = false;
  bool clamped = false;  // beta_NE < 1, radicand of the upper endpoint clamped at 0
  double consistency = 0.0;  // max |P^{-1} P_explicit - I|, a guard on the handle itself
  // saddle-point quantities
  double alpha_ne = 0.0, beta_ne = 0.0, alpha_f = 0.0, beta_f = 0.0;
  double trace_mean = 0.0;  // mean eigenvalue of Fhat^{-1} F
};

/// A Diag(ghat) A^T + delta I with its preconditioner.
struct NeInstance {
  SparseMatrix A;
  std::vector<double> ghat;
  double delta = 0.0;
};

/// K = [-(Q + rho I), A^T; A, delta I] with Q symmetric_lower.
struct SaddleInstance {
  SparseMatrix A;
  SparseMatrix Q;
  double rho = 0.0;
  double delta = 0.0;
};

constexpr double kUnitTol = 1e-7;
constexpr double kEndpointRelTol = 1e-9;

/// Eigenvalues of P_NE^{-1} Mhat against the applicable interval.
SpectralReport check_pne_intervals(const NeInstance& inst, const SparsificationPlan& plan);

/// Eigenvalues of P_AS^{-1} K against I_- and I_+. Diag(Q) uses the Cholesky
/// normal-equations preconditioner; the block modes use the implicit one and
/// need a plan without sparsified rows.
SpectralReport check_pas_intervals(const SaddleInstance& inst, const SparsificationPlan& plan,
                                   HessianMode mode);

/// Eigenvalues of P_K^{-1} K P_K^{-T}; counts those within tol of -1 or +1.
SpectralReport check_pk_spectrum(const SaddleInstance& inst, const SparsificationPlan& plan,
                                 double tol = 1e-9);

/// LP bound: 1 <= lambda(P^{-1} M) <= 1 + max_{j in N} G_jj sigma_max(A)^2 / delta,
/// with P dropping the columns in partition.nonbasic.
SpectralReport check_lp_bound(const NeInstance& inst, const Partition& partition);

/// One line: label, pass flag, counts, intervals and the eigenvalue range.
std::string format_report(const SpectralReport& r);

}  // namespace regsaddle
