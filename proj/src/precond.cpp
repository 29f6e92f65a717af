#include "regsaddle/precond.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "regsaddle/qp_model.hpp"

namespace regsaddle {

namespace {

std::vector<Index> complement(Index n, std::span<const Index> taken) {
  std::vector<char> mask(static_cast<std::size_t>(n), 0);
  for (Index j : taken) mask[j] = 1;
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(n) - taken.size());
  for (Index j = 0; j < n; ++j)
    if (!mask[j]) out.push_back(j);
  return out;
}

std::vector<Index> dedupe(std::vector<Index> v, Index bound, const char* what) {
  std::vector<char> seen(static_cast<std::size_t>(bound), 0);
  std::vector<Index> out;
  for (Index j : v) {
    if (j < 0 || j >= bound) throw std::out_of_range(what);
    if (!seen[j]) out.push_back(j);
    seen[j] = 1;
  }
  return out;
}

std::vector<double> gather(std::span<const double> x, std::span<const Index> idx) {
  std::vector<double> out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = x[idx[k]];
  return out;
}

void check_dim(const PrecondHandle& h, std::size_t len) {
  if (static_cast<Index>(len) != h.dim())
    throw DimensionError("preconditioner: vector length does not match");
}

// A with the given columns emptied, shape unchanged.
SparseMatrix zero_columns(const SparseMatrix& a, std::span<const Index> cols) {
  std::vector<char> drop(static_cast<std::size_t>(a.ncols()), 0);
  for (Index j : cols) drop[j] = 1;
  std::vector<Index> ptr{0}, rows;
  std::vector<double> vals;
  for (Index j = 0; j < a.ncols(); ++j) {
    if (!drop[j]) {
      const auto r = a.col_rows(j);
      const auto v = a.col_values(j);
      rows.insert(rows.end(), r.begin(), r.end());
      vals.insert(vals.end(), v.begin(), v.end());
    }
    ptr.push_back(static_cast<Index>(rows.size()));
  }
  return SparseMatrix(a.nrows(), a.ncols(), std::move(ptr), std::move(rows), std::move(vals));
}

}  // namespace

Partition partition_variables(std::span<const double> g, double mu, double kappa) {
  if (!(mu > 0.0) || !(kappa > 0.0))
    throw std::invalid_argument("partition_variables: mu and kappa must be > 0");
  Partition p;
  const double lo = kappa * mu;
  const double hi = 1.0 / (kappa * mu);
  for (Index j = 0; j < static_cast<Index>(g.size()); ++j) {
    if (!(g[j] > 0.0)) throw std::invalid_argument("partition_variables: g must be > 0");
    if (lo >= hi) {
      p.undecided.push_back(j);
    } else if (g[j] <= lo) {
      p.nonbasic.push_back(j);
    } else if (g[j] >= hi) {
      p.basic.push_back(j);
    } else {
      p.undecided.push_back(j);
    }
  }
  return p;
}

DensityPlan density_plan(const SparseMatrix& a, double col_density, double row_density,
                         Index max_drop) {
  if (!(col_density > 0.0 && col_density <= 1.0) || !(row_density > 0.0 && row_density <= 1.0))
    throw std::invalid_argument("density_plan: thresholds must lie in (0, 1]");
  const auto prof = nnz_profile(a);
  auto pick = [](const std::vector<Index>& counts, double threshold) {
    std::vector<Index> idx;
    for (Index j = 0; j < static_cast<Index>(counts.size()); ++j)
      if (counts[j] > 0 && counts[j] >= threshold) idx.push_back(j);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Index u, Index v) { return counts[u] > counts[v]; });
    return idx;
  };
  DensityPlan plan;
  plan.dense_cols = pick(prof.col_counts, col_density * a.nrows());
  if (static_cast<Index>(plan.dense_cols.size()) > std::max<Index>(max_drop, 0))
    plan.dense_cols.resize(static_cast<std::size_t>(std::max<Index>(max_drop, 0)));
  plan.dense_rows = pick(prof.row_counts, row_density * a.ncols());
  return plan;
}

std::vector<Index> SparsificationPlan::kept_cols() const {
  return complement(perm_c.size(), drop_cols);
}

std::vector<Index> SparsificationPlan::kept_rows() const {
  return complement(perm_r.size(), sparsify_rows);
}

SparsificationPlan make_plan(Index m, Index n, std::vector<Index> drop_cols,
                             std::vector<Index> sparsify_rows, std::vector<Index> dense_cols,
                             Partition partition) {
  SparsificationPlan plan;
  plan.drop_cols = dedupe(std::move(drop_cols), n, "make_plan: column out of range");
  plan.sparsify_rows = dedupe(std::move(sparsify_rows), m, "make_plan: row out of range");
  plan.dense_cols = dedupe(std::move(dense_cols), n, "make_plan: column out of range");
  plan.partition = std::move(partition);
  auto fc = plan.drop_cols;
  for (Index j : complement(n, plan.drop_cols)) fc.push_back(j);
  plan.perm_c = Permutation(std::move(fc));
  auto fr = plan.sparsify_rows;
  for (Index i : complement(m, plan.sparsify_rows)) fr.push_back(i);
  plan.perm_r = Permutation(std::move(fr));
  return plan;
}

HessianApprox sparsify_hessian(const SparseMatrix& h, std::span<const double> theta_inv,
                               double rho, const SparsificationPlan& plan, HessianMode mode) {
  const auto q = hessian_with_barrier(h, theta_inv);
  const Index n = q.ncols();
  if (plan.perm_c.size() != n) throw DimensionError("sparsify_hessian: plan size mismatch");
  std::vector<char> dropped(static_cast<std::size_t>(n), 0);
  for (Index j : plan.drop_cols) dropped[j] = 1;

  HessianApprox out;
  out.mode = mode;
  out.rho = rho;
  std::vector<Triplet> t;
  for (Index j = 0; j < n; ++j) {
    const auto r = q.col_rows(j);
    const auto v = q.col_values(j);
    for (std::size_t p = 0; p < r.size(); ++p) {
      const Index i = r[p];
      bool keep;
      if (i == j) {
        keep = true;
      } else if (dropped[i] != dropped[j]) {
        keep = false;
      } else if (dropped[i]) {
        keep = mode == HessianMode::block_diag_custom;
      } else {
        keep = mode != HessianMode::diag_all;
      }
      if (keep) {
        t.push_back({i, j, v[p]});
      } else if (v[p] != 0.0) {
        if (dropped[i] || dropped[j]) out.coupling_dropped = true;
        else out.kept_block_exact = false;
      }
    }
  }
  out.qhat = SparseMatrix::from_triplets(n, n, t, Symmetry::symmetric_lower);
  return out;
}

const char* to_string(PrecondKind k) {
  switch (k) {
    case PrecondKind::pne_chol: return "pne-chol";
    case PrecondKind::pne_ldl: return "pne-ldl";
    case PrecondKind::pas_chol: return "pas-chol";
    case PrecondKind::pas_ldl: return "pas-ldl";
    case PrecondKind::pk: return "pk";
  }
  return "?";
}

PrecondKind parse_precond_kind(const std::string& s) {
  for (auto k : {PrecondKind::pne_chol, PrecondKind::pne_ldl, PrecondKind::pas_chol,
                 PrecondKind::pas_ldl, PrecondKind::pk})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown preconditioner '" + s + "'");
}

PrecondHandle::PrecondHandle(PrecondKind kind, Data data, SparsificationPlan plan,
                             PrecondTheory theory)
    : kind_(kind), data_(std::move(data)), plan_(std::move(plan)), theory_(theory) {}

Index PrecondHandle::dim() const {
  return std::visit(
      [](const auto& d) -> Index {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PneCholData> || std::is_same_v<T, PneLdlData>)
          return d.m;
        else if constexpr (std::is_same_v<T, PasData>)
          return d.n + d.ne->dim();
        else
          return d.n + d.m;
      },
      data_);
}

Index PrecondHandle::factor_nnz() const {
  return std::visit(
      [](const auto& d) -> Index {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PneCholData>)
          return d.m11.nnz_L + d.m22.nnz_L;
        else if constexpr (std::is_same_v<T, PneLdlData>)
          return d.kb.nnz_L;
        else if constexpr (std::is_same_v<T, PasData>)
          return d.fhat.nnz_L + d.ne->factor_nnz();
        else
          return d.khat.nnz_L;
      },
      data_);
}

std::vector<double> apply_inverse(const PrecondHandle& h, std::span<const double> r) {
  check_dim(h, r.size());
  return std::visit(
      [&](const auto& d) -> std::vector<double> {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PneCholData>) {
          std::vector<double> out(r.size());
          const auto x1 = solve_chol(d.m11, gather(r, d.rows_r));
          const auto x2 = solve_chol(d.m22, gather(r, d.rows_s));
          for (std::size_t k = 0; k < x1.size(); ++k) out[d.rows_r[k]] = x1[k];
          for (std::size_t k = 0; k < x2.size(); ++k) out[d.rows_s[k]] = x2[k];
          return out;
        } else if constexpr (std::is_same_v<T, PneLdlData>) {
          std::vector<double> rhs(static_cast<std::size_t>(d.nb), 0.0);
          rhs.insert(rhs.end(), r.begin(), r.end());
          auto w = solve_ldlt(d.kb, rhs);
          return {w.begin() + d.nb, w.end()};
        } else if constexpr (std::is_same_v<T, PasData>) {
          auto out = solve_chol(d.fhat, r.first(static_cast<std::size_t>(d.n)));
          const auto w2 = apply_inverse(*d.ne, r.subspan(static_cast<std::size_t>(d.n)));
          out.insert(out.end(), w2.begin(), w2.end());
          return out;
        } else {
          const auto half = ldlt_half_solve(d.khat, r);
          return ldlt_half_solve_transpose(d.khat, half);
        }
      },
      h.data());
}

PrecondHandle build_pne_chol(const SparseMatrix& a, std::span<const double> ghat,
                             double delta, const SparsificationPlan& plan) {
  const Index m = a.nrows(), n = a.ncols();
  if (static_cast<Index>(ghat.size()) != n || plan.perm_c.size() != n ||
      plan.perm_r.size() != m)
    throw DimensionError("build_pne_chol: sizes do not match the plan");
  PneCholData d;
  d.m = m;
  d.rows_r = plan.sparsify_rows;
  d.rows_s = plan.kept_rows();
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  const auto kept = plan.kept_cols();
  // rows R keep every column, rows S only the kept ones
  d.m11 = cholesky(normal_matrix(extract_submatrix(a, d.rows_r, all), ghat, delta));
  d.m22 = cholesky(
      normal_matrix(extract_submatrix(a, d.rows_s, kept), gather(ghat, kept), delta));
  PrecondTheory th;
  th.kc = plan.kc();
  th.kr = plan.kr();
  th.guaranteed_unit = std::max<Index>(m - (2 * th.kr + th.kc), 0);
  return PrecondHandle(PrecondKind::pne_chol, std::move(d), plan, th);
}

PrecondHandle build_pne_ldl(const SparseMatrix& a, const SparseMatrix& h,
                            std::span<const double> theta_inv, double rho, double delta,
                            const SparsificationPlan& plan) {
  if (plan.kr() != 0)
    throw std::invalid_argument("build_pne_ldl: row sparsification is not supported");
  if (!(rho > 0.0) || !(delta > 0.0))
    throw std::invalid_argument("build_pne_ldl: rho and delta must be > 0");
  const auto kept = plan.kept_cols();
  const auto q = hessian_with_barrier(h, theta_inv);
  const auto kb = assemble_saddle(extract_columns(a, kept), extract_principal(q, kept), rho,
                                  delta);
  const auto pol = ldl_pivot_policy(delta, rho, true);
  PneLdlData d;
  d.m = a.nrows();
  d.nb = static_cast<Index>(kept.size());
  d.kb = ldlt(kb, pol.threshold, pol.allow_2x2);
  PrecondTheory th;
  th.kc = plan.kc();
  th.guaranteed_unit = std::max<Index>(d.m - th.kc, 0);
  return PrecondHandle(PrecondKind::pne_ldl, std::move(d), plan, th);
}

PrecondHandle build_pas(const HessianApprox& qhat, std::shared_ptr<const PrecondHandle> ne) {
  if (!ne || (ne->kind() != PrecondKind::pne_chol && ne->kind() != PrecondKind::pne_ldl))
    throw std::invalid_argument("build_pas: needs a normal-equations preconditioner");
  const Index n = qhat.qhat.ncols();
  PasData d;
  d.n = n;
  const std::vector<double> shift(static_cast<std::size_t>(n), qhat.rho);
  d.fhat = cholesky(add_diagonal(qhat.qhat, shift));
  const auto kind =
      ne->kind() == PrecondKind::pne_chol ? PrecondKind::pas_chol : PrecondKind::pas_ldl;
  PrecondTheory th{ne->theory().kc, ne->theory().kr, 0};
  auto plan = ne->plan();
  d.ne = std::move(ne);
  return PrecondHandle(kind, std::move(d), std::move(plan), th);
}

PrecondHandle build_pk(const SparseMatrix& a, const HessianApprox& qhat, double delta,
                       const SparsificationPlan& plan) {
  const Index n = a.ncols(), m = a.nrows();
  const auto khat = assemble_saddle(zero_columns(a, plan.drop_cols), qhat.qhat, qhat.rho, delta);
  const auto pol = ldl_pivot_policy(delta, qhat.rho, false);
  PkData d;
  d.n = n;
  d.m = m;
  d.khat = ldlt(khat, pol.threshold, false);
  PrecondTheory th;
  th.kc = plan.kc();
  // The dropped variables are decoupled in Khat, so their unit vectors stay
  // in the -1 eigenspace. K - Khat = sum_j e_j w_j^T + w_j e_j^T then removes
  // at most 2 dimensions per column from the -1 eigenspace and 1 from the +1 one.
  if (qhat.kept_block_exact) th.guaranteed_unit = std::max<Index>(n + m - 3 * th.kc, 0);
  return PrecondHandle(PrecondKind::pk, std::move(d), plan, th);
}

std::vector<double> pk_two_sided(const PrecondHandle& h, const SparseMatrix& k,
                                 std::span<const double> v) {
  const auto* d = std::get_if<PkData>(&h.data());
  if (!d) throw std::invalid_argument("pk_two_sided: handle is not pk");
  check_dim(h, v.size());
  const auto u = ldlt_half_solve_transpose(d->khat, v);
  return ldlt_half_solve(d->khat, spmv(k, u));
}

}  // namespace regsaddle
