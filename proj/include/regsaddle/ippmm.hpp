#pragma once

// Regularized primal-dual interior-point method (interior point proximal
// method of multipliers) with a Mehrotra predictor-corrector. Each Newton
// system is solved either by PCG on the normal equations or by MINRES on the
// saddle-point matrix, preconditioned by one of the handles in precond.hpp.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "regsaddle/krylov.hpp"
#include "regsaddle/precond.hpp"
#include "regsaddle/qp_model.hpp"

namespace regsaddle {

struct IpmIterationRecord;

struct SolverOptions {
  PrecondKind precond_kind = PrecondKind::pne_chol;
  double tol = 1e-6;
  Index max_ipm_iters = 100;
  Index max_pcg = 100;
  Index max_minres = 200;
  double col_density = 0.15;
  double row_density = 0.25;
  Index max_drop = 30;
  double kappa = 1.0;
  double reg_floor = 1e-10;
  // which sparsifications the preconditioner may use
  bool drop_nonbasic = true;
  bool drop_dense_cols = true;
  bool sparsify_dense_rows = true;
  IterationSink krylov_sink;
  std::function<void(const IpmIterationRecord&)> on_iteration;

  /// Throws std::invalid_argument on a non-positive value or a density outside (0, 1].
  void validate() const;
};

struct IpmIterationRecord {
  Index iteration = 0;
  double mu = 0.0;  // after the step
  double delta = 0.0;
  double rho = 0.0;
  Index krylov_predictor = 0;
  Index krylov_corrector = 0;
  double relres_predictor = 0.0;
  double relres_corrector = 0.0;
  Index factor_nnz = 0;
  double primal_residual = 0.0;  // ||Ax - b|| / (1 + ||b||), after the step
  double dual_residual = 0.0;    // ||c + Hx - A^T y - z|| / (1 + ||c||)
  double alpha_primal = 0.0;
  double alpha_dual = 0.0;
  Index dropped_cols = 0;
  Index sparsified_rows = 0;
  bool regularization_raised = false;
};

struct IpmTrace {
  double initial_mu = 0.0;
  std::vector<IpmIterationRecord> iterations;

  Index total_krylov() const;
  Index max_factor_nnz() const;
};

enum class SolveStatus { converged, iteration_limit };

const char* to_string(SolveStatus s);

struct SolveResult {
  IterateState state;
  IpmTrace trace;
  SolveStatus status = SolveStatus::iteration_limit;
  PrecondKind route = PrecondKind::pne_chol;  // kind actually used
  bool normal_equations = false;              // PCG on M rather than MINRES on K
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double seconds = 0.0;
  std::string message;
};

/// Throws IllPosed when factorization fails even after raising the
/// regularization by 10x.
SolveResult solve(const ProblemQP& problem, const SolverOptions& opts);

struct Regularization {
  double delta;
  double rho;
};

/// delta = rho = max(mu_new, reg_floor).
Regularization update_regularization(double mu_new, double reg_floor = 1e-10);

struct Direction {
  std::vector<double> dx;
  std::vector<double> dy;
  std::vector<double> dz;
};

struct StepLengths {
  double primal;
  double dual;
};

/// Largest steps in (0, 1] with x^I + a dx^I >= (1 - tau) x^I, likewise z.
StepLengths step_lengths(const IterateState& state, const Direction& dir,
                         const ProblemQP& problem, double tau = 0.995);

/// Kind actually used for this problem: normal-equations kinds are promoted
/// to their saddle-point counterparts when H is not diagonal.
PrecondKind effective_kind(const ProblemQP& problem, PrecondKind requested);

/// True when the Newton systems are solved through the normal equations.
bool uses_normal_equations(const ProblemQP& problem, PrecondKind requested);

struct ProxCenters {
  std::vector<double> zeta;    // primal
  std::vector<double> lambda;  // dual
};

/// Linear system of one IPM iteration with its preconditioner.
struct NewtonSystem {
  bool normal_equations = false;
  PrecondKind kind = PrecondKind::pne_chol;
  std::vector<double> theta_inv;
  std::vector<double> f_diag;  // diagonal of Q + rho I (normal-equations route)
  double delta = 0.0;
  double rho = 0.0;
  std::shared_ptr<const PrecondHandle> precond;
};

/// Builds the preconditioner for the given iterate. dense is the density
/// plan of A computed once per solve.
NewtonSystem prepare_newton_system(const ProblemQP& problem, const IterateState& state,
                                   const SolverOptions& opts, const DensityPlan& dense);

struct NewtonResult {
  Direction dir;
  Index krylov_iters = 0;
  double relres = 0.0;
  KrylovStatus status = KrylovStatus::converged;
  bool accepted = false;  // converged or at least 3-digit accurate
};

/// r_c on I: sigma*mu - x z - dx_aff dz_aff (affine term omitted when null).
std::vector<double> complementarity_rhs(const IterateState& state, const ProblemQP& problem,
                                        double sigma, const Direction* affine);

/// Solves the regularized Newton system for the given complementarity
/// right-hand side.
NewtonResult newton_step(const NewtonSystem& sys, const ProblemQP& problem,
                         const IterateState& state, const ProxCenters& centers,
                         std::span<const double> rc, const SolverOptions& opts);

/// Mehrotra-style strictly interior starting point.
IterateState starting_point(const ProblemQP& problem);

}  // namespace regsaddle
