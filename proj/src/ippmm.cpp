#include "regsaddle/ippmm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "regsaddle/factor.hpp"

namespace regsaddle {

namespace {

constexpr double kAcceptRelres = 1e-3;

double scaled_primal(const Residuals& r, const ProblemQP& p) {
  return norm2(r.primal) / (1.0 + norm2(p.b));
}

double scaled_dual(const Residuals& r, const ProblemQP& p) {
  return norm2(r.dual) / (1.0 + norm2(p.c));
}

bool is_diagonal_hessian(const ProblemQP& p) { return p.H.is_structurally_diagonal(); }

}  // namespace

void SolverOptions::validate() const {
  auto pos = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  pos(tol, "tol");
  pos(kappa, "kappa");
  pos(reg_floor, "reg_floor");
  if (max_ipm_iters <= 0 || max_pcg <= 0 || max_minres <= 0)
    throw std::invalid_argument("iteration limits must be positive");
  if (max_drop < 0) throw std::invalid_argument("max_drop must be nonnegative");
  if (!(col_density > 0.0 && col_density <= 1.0) || !(row_density > 0.0 && row_density <= 1.0))
    throw std::invalid_argument("densities must lie in (0, 1]");
}

Index IpmTrace::total_krylov() const {
  Index t = 0;
  for (const auto& r : iterations) t += r.krylov_predictor + r.krylov_corrector;
  return t;
}

Index IpmTrace::max_factor_nnz() const {
  Index t = 0;
  for (const auto& r : iterations) t = std::max(t, r.factor_nnz);
  return t;
}

const char* to_string(SolveStatus s) {
  return s == SolveStatus::converged ? "converged" : "iteration_limit";
}

Regularization update_regularization(double mu_new, double reg_floor) {
  if (!(mu_new >= 0.0)) throw std::invalid_argument("update_regularization: mu must be >= 0");
  const double r = std::max(mu_new, reg_floor);
  return {r, r};
}

StepLengths step_lengths(const IterateState& state, const Direction& dir,
                         const ProblemQP& problem, double tau) {
  StepLengths s{1.0, 1.0};
  for (Index j : problem.ineq_set) {
    if (dir.dx[j] < 0.0) s.primal = std::min(s.primal, -tau * state.x[j] / dir.dx[j]);
    if (dir.dz[j] < 0.0) s.dual = std::min(s.dual, -tau * state.z[j] / dir.dz[j]);
  }
  return s;
}

PrecondKind effective_kind(const ProblemQP& problem, PrecondKind requested) {
  if (is_diagonal_hessian(problem)) return requested;
  if (requested == PrecondKind::pne_chol) return PrecondKind::pas_chol;
  if (requested == PrecondKind::pne_ldl) return PrecondKind::pas_ldl;
  return requested;
}

bool uses_normal_equations(const ProblemQP& problem, PrecondKind requested) {
  const auto k = effective_kind(problem, requested);
  return k == PrecondKind::pne_chol || k == PrecondKind::pne_ldl;
}

NewtonSystem prepare_newton_system(const ProblemQP& problem, const IterateState& state,
                                   const SolverOptions& opts, const DensityPlan& dense) {
  NewtonSystem sys;
  sys.kind = effective_kind(problem, opts.precond_kind);
  sys.normal_equations = uses_normal_equations(problem, opts.precond_kind);
  sys.delta = state.delta;
  sys.rho = state.rho;
  sys.theta_inv = theta_inverse(state, problem);
  const Index n = problem.n(), m = problem.m();

  const auto hdiag = problem.H.diagonal_values();
  std::vector<double> g(static_cast<std::size_t>(n));
  sys.f_diag.resize(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    sys.f_diag[j] = hdiag[j] + sys.theta_inv[j] + state.rho;
    g[j] = 1.0 / sys.f_diag[j];
  }
  Partition part = partition_variables(g, std::max(state.mu, opts.reg_floor), opts.kappa);

  const bool cholesky_family =
      sys.kind == PrecondKind::pne_chol || sys.kind == PrecondKind::pas_chol;
  std::vector<Index> drop;
  if (opts.drop_nonbasic) drop = part.nonbasic;
  std::vector<Index> dense_cols, rows;
  if (cholesky_family) {
    if (opts.drop_dense_cols) dense_cols = dense.dense_cols;
    if (opts.sparsify_dense_rows) rows = dense.dense_rows;
  }
  drop.insert(drop.end(), dense_cols.begin(), dense_cols.end());
  auto plan = make_plan(m, n, std::move(drop), std::move(rows), std::move(dense_cols),
                        std::move(part));

  switch (sys.kind) {
    case PrecondKind::pne_chol:
      sys.precond = std::make_shared<PrecondHandle>(build_pne_chol(problem.A, g, state.delta, plan));
      break;
    case PrecondKind::pne_ldl:
      sys.precond = std::make_shared<PrecondHandle>(build_pne_ldl(
          problem.A, problem.H, sys.theta_inv, state.rho, state.delta, plan));
      break;
    case PrecondKind::pas_chol: {
      auto qhat = sparsify_hessian(problem.H, sys.theta_inv, state.rho, plan, HessianMode::diag_all);
      std::vector<double> ghat(static_cast<std::size_t>(n));
      const auto qd = qhat.qhat.diagonal_values();
      for (Index j = 0; j < n; ++j) ghat[j] = 1.0 / (qd[j] + state.rho);
      auto ne = std::make_shared<const PrecondHandle>(
          build_pne_chol(problem.A, ghat, state.delta, plan));
      sys.precond = std::make_shared<PrecondHandle>(build_pas(qhat, std::move(ne)));
      break;
    }
    case PrecondKind::pas_ldl: {
      auto qhat = sparsify_hessian(problem.H, sys.theta_inv, state.rho, plan,
                                   HessianMode::diag_on_n_full_on_b);
      auto ne = std::make_shared<const PrecondHandle>(build_pne_ldl(
          problem.A, problem.H, sys.theta_inv, state.rho, state.delta, plan));
      sys.precond = std::make_shared<PrecondHandle>(build_pas(qhat, std::move(ne)));
      break;
    }
    case PrecondKind::pk: {
      auto qhat = sparsify_hessian(problem.H, sys.theta_inv, state.rho, plan,
                                   HessianMode::diag_on_n_full_on_b);
      sys.precond = std::make_shared<PrecondHandle>(build_pk(problem.A, qhat, state.delta, plan));
      break;
    }
  }
  return sys;
}

std::vector<double> complementarity_rhs(const IterateState& state, const ProblemQP& problem,
                                        double sigma, const Direction* affine) {
  std::vector<double> rc(static_cast<std::size_t>(problem.n()), 0.0);
  const double target = sigma * state.mu;
  for (Index j : problem.ineq_set) {
    rc[j] = target - state.x[j] * state.z[j];
    if (affine) rc[j] -= affine->dx[j] * affine->dz[j];
  }
  return rc;
}

NewtonResult newton_step(const NewtonSystem& sys, const ProblemQP& problem,
                         const IterateState& state, const ProxCenters& centers,
                         std::span<const double> rc, const SolverOptions& opts) {
  const Index n = problem.n(), m = problem.m();
  const auto& A = problem.A;
  // regularized residuals
  const auto hx = spmv(problem.H, state.x);
  const auto aty = spmv(A, state.y, true);
  const auto ax = spmv(A, state.x);
  std::vector<double> xi1(static_cast<std::size_t>(n)), xi2(static_cast<std::size_t>(m));
  for (Index j = 0; j < n; ++j) {
    const double rd = problem.c[j] + hx[j] - aty[j] - state.z[j] +
                      sys.rho * (state.x[j] - centers.zeta[j]);
    xi1[j] = rd;
  }
  for (Index j : problem.ineq_set) xi1[j] -= rc[j] / state.x[j];
  for (Index i = 0; i < m; ++i)
    xi2[i] = problem.b[i] - ax[i] - sys.delta * (state.y[i] - centers.lambda[i]);

  NewtonResult out;
  auto& d = out.dir;
  const auto pinv = [&](std::span<const double> r) { return apply_inverse(*sys.precond, r); };

  if (sys.normal_equations) {
    // M dy = xi2 + A F^{-1} xi1
    std::vector<double> t(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) t[j] = xi1[j] / sys.f_diag[j];
    auto rhs = spmv(A, t);
    for (Index i = 0; i < m; ++i) rhs[i] += xi2[i];
    const auto apply_m = [&](std::span<const double> v) {
      auto w = spmv(A, v, true);
      for (Index j = 0; j < n; ++j) w[j] /= sys.f_diag[j];
      auto out_v = spmv(A, w);
      for (Index i = 0; i < m; ++i) out_v[i] += sys.delta * v[i];
      return out_v;
    };
    const double tol = adaptive_tol(state.mu, norm2(rhs), opts.tol);
    auto kr = pcg(apply_m, pinv, rhs, tol, opts.max_pcg, opts.krylov_sink);
    d.dy = std::move(kr.solution);
    const auto atdy = spmv(A, d.dy, true);
    d.dx.resize(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) d.dx[j] = (atdy[j] - xi1[j]) / sys.f_diag[j];
    out.krylov_iters = kr.iterations;
    out.relres = kr.final_relres;
    out.status = kr.status;
  } else {
    std::vector<double> rhs = xi1;
    rhs.insert(rhs.end(), xi2.begin(), xi2.end());
    SaddleOperator op{&problem, sys.theta_inv, sys.delta, sys.rho};
    const auto apply_k = [&](std::span<const double> v) { return apply_saddle(op, v); };
    const double tol = adaptive_tol(state.mu, norm2(rhs), opts.tol);
    auto kr = minres(apply_k, pinv, rhs, tol, opts.max_minres, opts.krylov_sink);
    d.dx.assign(kr.solution.begin(), kr.solution.begin() + n);
    d.dy.assign(kr.solution.begin() + n, kr.solution.end());
    out.krylov_iters = kr.iterations;
    out.relres = kr.final_relres;
    out.status = kr.status;
  }
  d.dz.assign(static_cast<std::size_t>(n), 0.0);
  for (Index j : problem.ineq_set) d.dz[j] = (rc[j] - state.z[j] * d.dx[j]) / state.x[j];
  out.accepted = out.status == KrylovStatus::converged || out.relres <= kAcceptRelres;
  return out;
}

IterateState starting_point(const ProblemQP& problem) {
  const Index n = problem.n(), m = problem.m();
  IterateState s;
  const std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
  double scale = 1.0;
  {
    const auto prof = normal_matrix(problem.A, ones, 1.0).diagonal_values();
    for (double v : prof) scale = std::max(scale, v);
  }
  const auto f = cholesky(normal_matrix(problem.A, ones, 1e-8 * scale));
  // x = A^T (A A^T)^{-1} b, y = (A A^T)^{-1} A c, z = c - A^T y
  s.x = spmv(problem.A, solve_chol(f, problem.b), true);
  s.y = solve_chol(f, spmv(problem.A, problem.c));
  const auto aty = spmv(problem.A, s.y, true);
  s.z.assign(static_cast<std::size_t>(n), 0.0);
  for (Index j : problem.ineq_set) s.z[j] = problem.c[j] - aty[j];

  if (!problem.ineq_set.empty()) {
    double minx = s.x[problem.ineq_set[0]], minz = s.z[problem.ineq_set[0]];
    for (Index j : problem.ineq_set) {
      minx = std::min(minx, s.x[j]);
      minz = std::min(minz, s.z[j]);
    }
    const double sx = std::max(-1.5 * minx, 0.0);
    const double sz = std::max(-1.5 * minz, 0.0);
    double xz = 0.0, sumx = 0.0, sumz = 0.0;
    for (Index j : problem.ineq_set) {
      s.x[j] += sx;
      s.z[j] += sz;
      xz += s.x[j] * s.z[j];
      sumx += s.x[j];
      sumz += s.z[j];
    }
    const double cx = sumz > 0.0 ? 0.5 * xz / sumz : 0.0;
    const double cz = sumx > 0.0 ? 0.5 * xz / sumx : 0.0;
    for (Index j : problem.ineq_set) {
      s.x[j] += cx;
      s.z[j] += cz;
      // degenerate data (e.g. b = 0 and c = 0) leaves zeros behind
      if (!(s.x[j] > 0.0)) s.x[j] = 1.0;
      if (!(s.z[j] > 0.0)) s.z[j] = 1.0;
    }
  }
  (void)m;
  s.mu = complementarity(s.x, s.z, problem);
  return s;
}

SolveResult solve(const ProblemQP& problem, const SolverOptions& opts) {
  opts.validate();
  problem.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = problem.n(), m = problem.m();

  SolveResult out;
  out.route = effective_kind(problem, opts.precond_kind);
  out.normal_equations = uses_normal_equations(problem, opts.precond_kind);
  const auto dense = density_plan(problem.A, opts.col_density, opts.row_density, opts.max_drop);

  IterateState st = starting_point(problem);
  {
    const auto reg = update_regularization(st.mu, opts.reg_floor);
    st.delta = reg.delta;
    st.rho = reg.rho;
  }
  out.trace.initial_mu = st.mu;
  ProxCenters centers{st.x, st.y};
  Residuals res = residuals(st, problem);
  double ref_p = norm2(res.primal), ref_d = norm2(res.dual);

  auto finish = [&](SolveStatus status, std::string msg) {
    out.status = status;
    out.message = std::move(msg);
    out.state = st;
    out.objective = problem.objective(st.x);
    out.primal_residual = scaled_primal(res, problem);
    out.dual_residual = scaled_dual(res, problem);
    out.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  };
  auto done = [&]() {
    // x^T z = n mu is the duality gap of the current iterate
    const double gap = st.mu * n / (1.0 + std::abs(problem.objective(st.x)));
    return scaled_primal(res, problem) <= opts.tol && scaled_dual(res, problem) <= opts.tol &&
           gap <= opts.tol;
  };

  for (Index it = 0; it < opts.max_ipm_iters; ++it) {
    if (done()) return finish(SolveStatus::converged, "converged");

    IpmIterationRecord rec;
    rec.iteration = it + 1;
    NewtonSystem sys;
    auto build = [&]() {
      try {
        sys = prepare_newton_system(problem, st, opts, dense);
        return true;
      } catch (const NotPositiveDefinite&) {
      } catch (const PivotBreakdown&) {
      }
      return false;
    };
    auto raise = [&]() {
      st.delta *= 10.0;
      st.rho *= 10.0;
      rec.regularization_raised = true;
    };
    if (!build()) {
      raise();
      if (!build())
        throw IllPosed("factorization failed after raising the regularization at iteration " +
                       std::to_string(it + 1));
    }
    // one retry with stronger regularization when a Krylov solve fails
    auto solve_slot = [&](std::span<const double> rc, Index& iters, double& relres,
                          bool& ok) {
      auto r = newton_step(sys, problem, st, centers, rc, opts);
      iters = r.krylov_iters;
      relres = r.relres;
      if (r.accepted || rec.regularization_raised) {
        ok = r.accepted;
        return r.dir;
      }
      raise();
      if (!build())
        throw IllPosed("factorization failed after raising the regularization at iteration " +
                       std::to_string(it + 1));
      r = newton_step(sys, problem, st, centers, rc, opts);
      iters += r.krylov_iters;
      relres = r.relres;
      ok = r.accepted;
      return r.dir;
    };

    bool ok = true;
    const auto rc_aff = complementarity_rhs(st, problem, 0.0, nullptr);
    const Direction aff =
        solve_slot(rc_aff, rec.krylov_predictor, rec.relres_predictor, ok);
    if (!ok) {
      rec.factor_nnz = sys.precond->factor_nnz();
      out.trace.iterations.push_back(rec);
      return finish(SolveStatus::iteration_limit,
                    "Krylov solve failed after raising the regularization");
    }
    const auto sa = step_lengths(st, aff, problem);
    double mu_aff = 0.0;
    if (n > 0) {
      for (Index j : problem.ineq_set)
        mu_aff += (st.x[j] + sa.primal * aff.dx[j]) * (st.z[j] + sa.dual * aff.dz[j]);
      mu_aff /= n;
    }
    const double sigma =
        st.mu > 0.0 ? std::clamp(std::pow(mu_aff / st.mu, 3.0), 0.01, 0.8) : 0.01;
    const auto rc = complementarity_rhs(st, problem, sigma, &aff);
    const Direction dir_corr = solve_slot(rc, rec.krylov_corrector, rec.relres_corrector, ok);
    rec.factor_nnz = sys.precond->factor_nnz();
    rec.dropped_cols = sys.precond->plan().kc();
    rec.sparsified_rows = sys.precond->plan().kr();
    if (!ok) {
      out.trace.iterations.push_back(rec);
      return finish(SolveStatus::iteration_limit,
                    "Krylov solve failed after raising the regularization");
    }

    auto step_for = [&](const Direction& d) {
      auto sl = step_lengths(st, d, problem);
      // one common step for QPs
      if (!problem.is_lp()) sl.primal = sl.dual = std::min(sl.primal, sl.dual);
      return sl;
    };
    auto mu_after = [&](const Direction& d, double a, double ad) {
      double acc = 0.0;
      for (Index j : problem.ineq_set) acc += (st.x[j] + a * d.dx[j]) * (st.z[j] + ad * d.dz[j]);
      return n > 0 ? acc / n : 0.0;
    };
    Direction dir = dir_corr;
    auto step = step_for(dir);
    // blend towards the affine direction while the corrected step raises mu
    if (mu_after(dir, step.primal, step.dual) > st.mu) {
      for (double t : {0.5, 0.25, 0.1, 0.0}) {
        Direction b = dir_corr;
        for (Index j = 0; j < n; ++j) {
          b.dx[j] = t * dir_corr.dx[j] + (1 - t) * aff.dx[j];
          b.dz[j] = t * dir_corr.dz[j] + (1 - t) * aff.dz[j];
        }
        for (Index i = 0; i < m; ++i) b.dy[i] = t * dir_corr.dy[i] + (1 - t) * aff.dy[i];
        const auto sb = step_for(b);
        dir = b;
        step = sb;
        if (mu_after(b, sb.primal, sb.dual) <= st.mu) break;
      }
    }
    for (Index j = 0; j < n; ++j) {
      st.x[j] += step.primal * dir.dx[j];
      st.z[j] += step.dual * dir.dz[j];
    }
    for (Index i = 0; i < m; ++i) st.y[i] += step.dual * dir.dy[i];
    st.mu = complementarity(st.x, st.z, problem);
    res = residuals(st, problem);

    rec.mu = st.mu;
    rec.delta = st.delta;
    rec.rho = st.rho;
    rec.alpha_primal = step.primal;
    rec.alpha_dual = step.dual;
    rec.primal_residual = scaled_primal(res, problem);
    rec.dual_residual = scaled_dual(res, problem);
    out.trace.iterations.push_back(rec);
    if (opts.on_iteration) opts.on_iteration(rec);

    const auto reg = update_regularization(st.mu, opts.reg_floor);
    st.delta = reg.delta;
    st.rho = reg.rho;
    const double np = norm2(res.primal), nd = norm2(res.dual);
    if (np <= 0.1 * ref_p) {
      centers.lambda = st.y;
      ref_p = np;
    }
    if (nd <= 0.1 * ref_d) {
      centers.zeta = st.x;
      ref_d = nd;
    }
  }
  if (done()) return finish(SolveStatus::converged, "converged");
  return finish(SolveStatus::iteration_limit, "iteration limit reached");
}

}  // namespace regsaddle
