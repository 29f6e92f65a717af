#pragma once

// Convex QP in standard form
//
//   min  c^T x + 1/2 x^T H x   s.t.  A x = b,  x_j >= 0 for j in I,  x_j free for j in F
//
// together with the iterate, the barrier scaling and the regularized
// saddle-point operator K = [-(Q + rho I), A^T; A, delta I], Q = H + Theta^{-1}.

#include <span>
#include <string>
#include <vector>

#include "regsaddle/sparse.hpp"

namespace regsaddle {

struct ProblemQP {
  std::string name;
  SparseMatrix A;  // m x n
  SparseMatrix H;  // n x n symmetric_lower, possibly without entries
  std::vector<double> b;
  std::vector<double> c;
  std::vector<Index> ineq_set;
  std::vector<Index> free_set;
  double objective_constant = 0.0;

  Index m() const noexcept { return A.nrows(); }
  Index n() const noexcept { return A.ncols(); }

  /// Throws DimensionError / std::invalid_argument when shapes or index sets
  /// are inconsistent.
  void validate() const;

  /// 1 for variables in the free set.
  std::vector<char> free_mask() const;

  bool is_lp() const noexcept { return H.nnz() == 0; }

  /// c^T x + 1/2 x^T H x + objective_constant.
  double objective(std::span<const double> x) const;
};

/// LP/QP with the given data; H empty when omitted. All variables are
/// nonnegative unless listed in free_set.
ProblemQP make_problem(SparseMatrix a, std::vector<double> b, std::vector<double> c,
                       SparseMatrix h = {}, std::vector<Index> free_set = {},
                       std::string name = "");

struct IterateState {
  std::vector<double> x;
  std::vector<double> z;  // zero on the free set
  std::vector<double> y;
  double mu = 0.0;
  double delta = 0.0;
  double rho = 0.0;
};

/// (x^I)^T z^I / n. The divisor is n, not |I|.
double complementarity(std::span<const double> x, std::span<const double> z,
                       const ProblemQP& problem);

/// Theta^{-1}: z_j / x_j on I, 0 on F.
std::vector<double> theta_inverse(const IterateState& state, const ProblemQP& problem);

struct ScalingDiagonal {
  std::vector<double> g;
};

/// g_j = 1/rho on F, 1/(rho + z_j/x_j) on I. Requires rho > 0.
ScalingDiagonal build_scaling(const IterateState& state, const ProblemQP& problem);

struct SaddleOperator {
  const ProblemQP* problem = nullptr;
  std::vector<double> theta_inv;
  double delta = 0.0;
  double rho = 0.0;
};

/// K v for v = (v1, v2) in R^{n+m}.
std::vector<double> apply_saddle(const SaddleOperator& op, std::span<const double> v);

struct Residuals {
  std::vector<double> primal;  // A x - b
  std::vector<double> dual;    // c + H x - A^T y - z
  double complementarity = 0.0;
};

Residuals residuals(const IterateState& state, const ProblemQP& problem);

/// Q = H + Diag(theta_inv), symmetric_lower.
SparseMatrix hessian_with_barrier(const SparseMatrix& h, std::span<const double> theta_inv);

/// [-(Q + rho I), A^T; A, delta I] as a symmetric_lower matrix of order n+m.
/// Q is symmetric_lower n x n (may be empty of entries).
SparseMatrix assemble_saddle(const SparseMatrix& a, const SparseMatrix& q, double rho,
                             double delta);

}  // namespace regsaddle
