#include "regsaddle/qp_model.hpp"

#include <algorithm>
#include <stdexcept>

namespace regsaddle {

void ProblemQP::validate() const {
  const Index nn = n(), mm = m();
  if (static_cast<Index>(b.size()) != mm) throw DimensionError("problem: |b| != m");
  if (static_cast<Index>(c.size()) != nn) throw DimensionError("problem: |c| != n");
  if (H.nrows() != nn || H.ncols() != nn || !H.is_symmetric())
    throw DimensionError("problem: H must be symmetric_lower n x n");
  std::vector<int> seen(static_cast<std::size_t>(nn), 0);
  for (Index j : ineq_set) {
    if (j < 0 || j >= nn) throw std::invalid_argument("problem: index set out of range");
    ++seen[j];
  }
  for (Index j : free_set) {
    if (j < 0 || j >= nn) throw std::invalid_argument("problem: index set out of range");
    ++seen[j];
  }
  if (std::any_of(seen.begin(), seen.end(), [](int s) { return s != 1; }))
    throw std::invalid_argument("problem: I and F must partition the variables");
}

std::vector<char> ProblemQP::free_mask() const {
  std::vector<char> mask(static_cast<std::size_t>(n()), 0);
  for (Index j : free_set) mask[j] = 1;
  return mask;
}

double ProblemQP::objective(std::span<const double> x) const {
  const auto hx = spmv(H, x);
  return dot(c, x) + 0.5 * dot(x, hx) + objective_constant;
}

ProblemQP make_problem(SparseMatrix a, std::vector<double> b, std::vector<double> c,
                       SparseMatrix h, std::vector<Index> free_set, std::string name) {
  ProblemQP p;
  p.name = std::move(name);
  const Index n = a.ncols();
  p.A = std::move(a);
  p.H = (h.nrows() == 0 && h.ncols() == 0 && n > 0)
            ? SparseMatrix::zero(n, n, Symmetry::symmetric_lower)
            : std::move(h);
  if (n == 0) p.H = SparseMatrix::zero(0, 0, Symmetry::symmetric_lower);
  p.b = std::move(b);
  p.c = std::move(c);
  std::sort(free_set.begin(), free_set.end());
  p.free_set = std::move(free_set);
  for (Index j = 0; j < n; ++j)
    if (!std::binary_search(p.free_set.begin(), p.free_set.end(), j))
      p.ineq_set.push_back(j);
  p.validate();
  return p;
}

double complementarity(std::span<const double> x, std::span<const double> z,
                       const ProblemQP& problem) {
  if (problem.n() == 0) return 0.0;
  double s = 0.0;
  for (Index j : problem.ineq_set) s += x[j] * z[j];
  return s / problem.n();
}

std::vector<double> theta_inverse(const IterateState& state, const ProblemQP& problem) {
  std::vector<double> t(static_cast<std::size_t>(problem.n()), 0.0);
  for (Index j : problem.ineq_set) t[j] = state.z[j] / state.x[j];
  return t;
}

ScalingDiagonal build_scaling(const IterateState& state, const ProblemQP& problem) {
  if (!(state.rho > 0.0)) throw std::invalid_argument("build_scaling: rho must be > 0");
  ScalingDiagonal s;
  s.g.assign(static_cast<std::size_t>(problem.n()), 1.0 / state.rho);
  for (Index j : problem.ineq_set) s.g[j] = 1.0 / (state.rho + state.z[j] / state.x[j]);
  return s;
}

std::vector<double> apply_saddle(const SaddleOperator& op, std::span<const double> v) {
  const ProblemQP& p = *op.problem;
  const Index n = p.n(), m = p.m();
  if (static_cast<Index>(v.size()) != n + m)
    throw DimensionError("apply_saddle: vector length must be n+m");
  const auto v1 = v.first(static_cast<std::size_t>(n));
  const auto v2 = v.subspan(static_cast<std::size_t>(n));
  std::vector<double> out(static_cast<std::size_t>(n + m));
  const auto hv = spmv(p.H, v1);
  const auto atv = spmv(p.A, v2, true);
  for (Index j = 0; j < n; ++j)
    out[j] = -(hv[j] + (op.theta_inv[j] + op.rho) * v1[j]) + atv[j];
  const auto av = spmv(p.A, v1);
  for (Index i = 0; i < m; ++i) out[n + i] = av[i] + op.delta * v2[i];
  return out;
}

Residuals residuals(const IterateState& state, const ProblemQP& problem) {
  Residuals r;
  r.primal = spmv(problem.A, state.x);
  for (Index i = 0; i < problem.m(); ++i) r.primal[i] -= problem.b[i];
  const auto hx = spmv(problem.H, state.x);
  const auto aty = spmv(problem.A, state.y, true);
  r.dual.resize(static_cast<std::size_t>(problem.n()));
  for (Index j = 0; j < problem.n(); ++j)
    r.dual[j] = problem.c[j] + hx[j] - aty[j] - state.z[j];
  r.complementarity = complementarity(state.x, state.z, problem);
  return r;
}

SparseMatrix hessian_with_barrier(const SparseMatrix& h, std::span<const double> theta_inv) {
  return add_diagonal(h, theta_inv);
}

SparseMatrix assemble_saddle(const SparseMatrix& a, const SparseMatrix& q, double rho,
                             double delta) {
  const Index n = a.ncols(), m = a.nrows();
  if (q.nrows() != n || q.ncols() != n || !q.is_symmetric())
    throw DimensionError("assemble_saddle: Q must be symmetric_lower n x n");
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(q.nnz() + a.nnz() + n + m));
  for (Index j = 0; j < n; ++j) {
    const auto r = q.col_rows(j);
    const auto v = q.col_values(j);
    for (std::size_t p = 0; p < r.size(); ++p) t.push_back({r[p], j, -v[p]});
    t.push_back({j, j, -rho});
    const auto ar = a.col_rows(j);
    const auto av = a.col_values(j);
    for (std::size_t p = 0; p < ar.size(); ++p) t.push_back({n + ar[p], j, av[p]});
  }
  for (Index i = 0; i < m; ++i) t.push_back({n + i, n + i, delta});
  return SparseMatrix::from_triplets(n + m, n + m, t, Symmetry::symmetric_lower);
}

}  // namespace regsaddle
