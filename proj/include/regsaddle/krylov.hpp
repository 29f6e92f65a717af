#pragma once

// Preconditioned CG and MINRES with short recurrences, no restarts.

#include <functional>
#include <span>
#include <vector>

#include "regsaddle/errors.hpp"

namespace regsaddle {

using LinearOperator = std::function<std::vector<double>(std::span<const double>)>;

/// Receives (iteration, relative residual) once per iteration.
using IterationSink = std::function<void(Index, double)>;

enum class KrylovStatus { converged, max_iter, breakdown };

const char* to_string(KrylovStatus s);

struct KrylovResult {
  std::vector<double> solution;
  Index iterations = 0;
  double final_relres = 0.0;  // ||b - A x|| / ||b||, recomputed at exit
  KrylovStatus status = KrylovStatus::max_iter;
  // PCG: recurrence ||r_k||/||b||. MINRES: preconditioned residual estimate
  // ||r_k||_{P^{-1}} / ||b||_{P^{-1}}, which is non-increasing.
  std::vector<double> residual_history;
};

/// Solves A x = b from x0 = 0. Stops when the recurrence residual reaches
/// tol and the recomputed residual confirms it; otherwise the recurrence is
/// replaced by the true residual and iteration continues.
KrylovResult pcg(const LinearOperator& apply_a, const LinearOperator& apply_pinv,
                 std::span<const double> b, double tol, Index max_iter,
                 const IterationSink& sink = {});

/// Preconditioned MINRES for symmetric, possibly indefinite A and SPD P.
/// The unpreconditioned residual is carried alongside the Lanczos recurrence
/// and used for the stopping test.
KrylovResult minres(const LinearOperator& apply_a, const LinearOperator& apply_pinv,
                    std::span<const double> b, double tol, Index max_iter,
                    const IterationSink& sink = {});

/// min{1e-3, max{0.1 mu, tol}} / max{1, rhs_norm}
double adaptive_tol(double mu, double rhs_norm, double tol = 1e-6);

}  // namespace regsaddle
