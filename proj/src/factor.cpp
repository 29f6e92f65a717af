#include "regsaddle/factor.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <unordered_map>
#include <utility>

namespace regsaddle {

namespace {

// Off-diagonal adjacency of a square symmetric pattern, both directions,
// sorted, without duplicates.
std::vector<std::vector<Index>> symmetric_adjacency(const SparseMatrix& s) {
  if (s.nrows() != s.ncols())
    throw DimensionError("factorization input must be square");
  const Index n = s.ncols();
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    for (Index i : s.col_rows(j)) {
      if (i == j) continue;
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return adj;
}

// Active submatrix during right-looking elimination. Off-diagonal entries are
// stored in both directions so each node sees its full neighbourhood.
class ActiveMatrix {
 public:
  explicit ActiveMatrix(const SparseMatrix& s)
      : diag_(static_cast<std::size_t>(s.ncols()), 0.0),
        nbrs_(static_cast<std::size_t>(s.ncols())) {
    if (s.nrows() != s.ncols())
      throw DimensionError("factorization input must be square");
    const bool sym = s.is_symmetric();
    for (Index j = 0; j < s.ncols(); ++j) {
      const auto rows = s.col_rows(j);
      const auto vals = s.col_values(j);
      for (std::size_t p = 0; p < rows.size(); ++p) {
        const Index i = rows[p];
        if (i == j) {
          diag_[j] += vals[p];
        } else if (sym) {
          nbrs_[i][j] += vals[p];
          nbrs_[j][i] += vals[p];
        } else if (i > j) {
          // general storage: read the lower triangle only
          nbrs_[i][j] += vals[p];
          nbrs_[j][i] += vals[p];
        }
      }
    }
  }

  double diag(Index p) const { return diag_[p]; }

  double entry(Index p, Index q) const {
    const auto it = nbrs_[p].find(q);
    return it == nbrs_[p].end() ? 0.0 : it->second;
  }

  // Neighbours of p sorted by index, detached from the active matrix.
  std::vector<std::pair<Index, double>> detach(Index p) {
    std::vector<std::pair<Index, double>> out(nbrs_[p].begin(), nbrs_[p].end());
    std::sort(out.begin(), out.end());
    for (const auto& [i, v] : out) nbrs_[i].erase(p);
    nbrs_[p].clear();
    return out;
  }

  // Largest |a_pq| over the active neighbours of p; -1 when p is isolated.
  Index strongest_neighbour(Index p) const {
    Index best = -1;
    double best_val = -1.0;
    for (const auto& [i, v] : nbrs_[p]) {
      const double a = std::abs(v);
      if (a > best_val || (a == best_val && i < best)) {
        best = i;
        best_val = a;
      }
    }
    return best;
  }

  // a_ij -= w for i != j, or a_ii -= w.
  void update(Index i, Index j, double w) {
    if (i == j) {
      diag_[i] -= w;
    } else {
      nbrs_[i][j] -= w;
      nbrs_[j][i] -= w;
    }
  }

 private:
  std::vector<double> diag_;
  std::vector<std::unordered_map<Index, double>> nbrs_;
};

struct PivotRecord {
  Index node;
  Index partner = -1;  // second node of a 2x2 block
  double d = 0.0;
  double offdiag = 0.0;
  double d2 = 0.0;
  std::vector<std::pair<Index, double>> col;   // L(:, node), original indices
  std::vector<std::pair<Index, double>> col2;  // L(:, partner)
};

PivotRecord eliminate_1x1(ActiveMatrix& a, Index p) {
  PivotRecord rec;
  rec.node = p;
  rec.d = a.diag(p);
  auto nb = a.detach(p);
  for (std::size_t u = 0; u < nb.size(); ++u) {
    const auto [i, ai] = nb[u];
    for (std::size_t v = u; v < nb.size(); ++v) {
      const auto [j, aj] = nb[v];
      a.update(i, j, ai * aj / rec.d);
    }
  }
  rec.col.reserve(nb.size());
  for (const auto& [i, ai] : nb) rec.col.emplace_back(i, ai / rec.d);
  return rec;
}

PivotRecord eliminate_2x2(ActiveMatrix& a, Index p, Index q) {
  PivotRecord rec;
  rec.node = p;
  rec.partner = q;
  rec.d = a.diag(p);
  rec.offdiag = a.entry(p, q);
  rec.d2 = a.diag(q);
  const double det = rec.d * rec.d2 - rec.offdiag * rec.offdiag;
  const double i11 = rec.d2 / det;
  const double i12 = -rec.offdiag / det;
  const double i22 = rec.d / det;

  auto np = a.detach(p);
  auto nq = a.detach(q);
  // merge the two neighbourhoods, excluding the block itself
  std::vector<std::pair<Index, std::pair<double, double>>> w;
  std::size_t u = 0, v = 0;
  while (u < np.size() || v < nq.size()) {
    Index i;
    double wp = 0.0, wq = 0.0;
    if (v == nq.size() || (u < np.size() && np[u].first < nq[v].first)) {
      i = np[u].first;
      wp = np[u++].second;
    } else if (u == np.size() || nq[v].first < np[u].first) {
      i = nq[v].first;
      wq = nq[v++].second;
    } else {
      i = np[u].first;
      wp = np[u++].second;
      wq = nq[v++].second;
    }
    if (i == p || i == q) continue;
    w.push_back({i, {wp, wq}});
  }
  std::vector<std::pair<double, double>> l(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const auto [wp, wq] = w[k].second;
    l[k] = {wp * i11 + wq * i12, wp * i12 + wq * i22};
  }
  for (std::size_t s = 0; s < w.size(); ++s) {
    for (std::size_t t = s; t < w.size(); ++t) {
      const double upd = l[s].first * w[t].second.first + l[s].second * w[t].second.second;
      a.update(w[s].first, w[t].first, upd);
    }
  }
  for (std::size_t k = 0; k < w.size(); ++k) {
    rec.col.emplace_back(w[k].first, l[k].first);
    rec.col2.emplace_back(w[k].first, l[k].second);
  }
  return rec;
}

struct EliminationResult {
  std::vector<PivotRecord> pivots;
  Index delayed = 0;
};

enum class Mode { cholesky, ldlt };

EliminationResult eliminate(const SparseMatrix& s, const Permutation& order, Mode mode,
                            double pivot_thr, bool allow_2x2) {
  if (order.size() != s.ncols())
    throw DimensionError("ordering size does not match the matrix");
  ActiveMatrix a(s);
  const Index n = s.ncols();
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  std::deque<Index> pending(order.forward().begin(), order.forward().end());
  EliminationResult res;
  res.pivots.reserve(static_cast<std::size_t>(n));
  std::size_t failures = 0;  // consecutive rejected candidates

  while (!pending.empty()) {
    const Index p = pending.front();
    pending.pop_front();
    if (done[p]) continue;
    const double dpp = a.diag(p);

    if (mode == Mode::cholesky) {
      if (!(dpp > 0.0)) throw NotPositiveDefinite(p, dpp);
      res.pivots.push_back(eliminate_1x1(a, p));
      done[p] = 1;
      continue;
    }

    if (dpp != 0.0 && std::abs(dpp) >= pivot_thr) {
      res.pivots.push_back(eliminate_1x1(a, p));
      done[p] = 1;
      failures = 0;
      continue;
    }

    if (allow_2x2) {
      const Index q = a.strongest_neighbour(p);
      if (q >= 0) {
        const double apq = a.entry(p, q);
        const double aqq = a.diag(q);
        const double det = dpp * aqq - apq * apq;
        if (std::abs(apq) >= pivot_thr && std::abs(det) >= 0.5 * apq * apq) {
          res.pivots.push_back(eliminate_2x2(a, p, q));
          done[p] = done[q] = 1;
          failures = 0;
          continue;
        }
        if (aqq != 0.0 && std::abs(aqq) >= pivot_thr) {
          // q is a sound 1x1 pivot; take it first and retry p afterwards
          res.pivots.push_back(eliminate_1x1(a, q));
          done[q] = 1;
          pending.push_front(p);
          failures = 0;
          continue;
        }
      }
    }

    // delay p to the end of the order
    std::size_t remaining = 0;
    for (Index c : pending) remaining += done[c] ? 0 : 1;
    if (failures >= remaining) throw PivotBreakdown(p, dpp, pivot_thr);
    ++failures;
    ++res.delayed;
    pending.push_back(p);
  }
  return res;
}

// Assembles L in permuted coordinates from the pivot sequence.
struct Assembled {
  std::vector<Index> order;
  SparseMatrix L;
};

Assembled assemble(const EliminationResult& res, Index n, bool cholesky) {
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(n));
  for (const auto& r : res.pivots) {
    order.push_back(r.node);
    if (r.partner >= 0) order.push_back(r.partner);
  }
  std::vector<Index> pos(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) pos[order[k]] = k;

  std::vector<Index> col_ptr{0};
  std::vector<Index> rows;
  std::vector<double> vals;
  auto emit = [&](Index k, double diag_val,
                  const std::vector<std::pair<Index, double>>& col) {
    std::vector<std::pair<Index, double>> c;
    c.reserve(col.size());
    for (const auto& [i, v] : col) c.emplace_back(pos[i], v);
    std::sort(c.begin(), c.end());
    rows.push_back(k);
    vals.push_back(diag_val);
    for (const auto& [i, v] : c) {
      rows.push_back(i);
      vals.push_back(v);
    }
    col_ptr.push_back(static_cast<Index>(rows.size()));
  };
  Index k = 0;
  for (const auto& r : res.pivots) {
    if (cholesky) {
      const double sd = std::sqrt(r.d);
      std::vector<std::pair<Index, double>> scaled = r.col;
      for (auto& e : scaled) e.second *= sd;
      emit(k++, sd, scaled);
    } else {
      emit(k++, 1.0, r.col);
      if (r.partner >= 0) emit(k++, 1.0, r.col2);
    }
  }
  return {std::move(order),
          SparseMatrix(n, n, std::move(col_ptr), std::move(rows), std::move(vals))};
}

void check_len(std::size_t got, Index want, const char* what) {
  if (static_cast<Index>(got) != want) throw DimensionError(what);
}

// In-place unit/non-unit lower solves on permuted vectors.
void lower_solve(const SparseMatrix& L, std::vector<double>& x, bool unit) {
  for (Index j = 0; j < L.ncols(); ++j) {
    const auto r = L.col_rows(j);
    const auto v = L.col_values(j);
    // first stored entry of each column is the diagonal
    if (!unit) x[j] /= v[0];
    const double xj = x[j];
    if (xj == 0.0) continue;
    for (std::size_t p = 1; p < r.size(); ++p) x[r[p]] -= v[p] * xj;
  }
}

void lower_transpose_solve(const SparseMatrix& L, std::vector<double>& x, bool unit) {
  for (Index j = L.ncols() - 1; j >= 0; --j) {
    const auto r = L.col_rows(j);
    const auto v = L.col_values(j);
    double acc = x[j];
    for (std::size_t p = 1; p < r.size(); ++p) acc -= v[p] * x[r[p]];
    x[j] = unit ? acc : acc / v[0];
  }
}

void require_diagonal_d(const LdlFactor& f) {
  if (f.used_2x2)
    throw std::logic_error("half solves need a strictly diagonal D (no 2x2 pivots)");
}

}  // namespace

Inertia LdlFactor::inertia() const {
  Inertia in;
  for (Index k = 0; k < size(); ++k) {
    if (offdiag[k] != 0.0) {
      const double a = d[k], b = offdiag[k], c = d[k + 1];
      const double tr = a + c;
      const double det = a * c - b * b;
      if (det < 0.0) {
        ++in.negative;
        ++in.positive;
      } else if (det > 0.0) {
        (tr > 0.0 ? in.positive : in.negative) += 2;
      } else {
        ++in.zero;
        (tr > 0.0 ? in.positive : tr < 0.0 ? in.negative : in.zero) += 1;
      }
      ++k;
      continue;
    }
    (d[k] > 0.0 ? in.positive : d[k] < 0.0 ? in.negative : in.zero) += 1;
  }
  return in;
}

PivotPolicy ldl_pivot_policy(double delta, double rho, bool implicit_normal_block) {
  const double reg = std::min(delta, rho);
  if (implicit_normal_block && reg <= 1e-8) return {1e-6, true};
  return {0.1 * std::min(reg, 1e-4), false};
}

Permutation analyze_order(const SparseMatrix& s) {
  auto adj = symmetric_adjacency(s);
  const Index n = s.ncols();
  std::set<std::pair<Index, Index>> queue;
  for (Index i = 0; i < n; ++i) queue.insert({static_cast<Index>(adj[i].size()), i});
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(n));
  std::vector<Index> merged;
  while (!queue.empty()) {
    const Index p = queue.begin()->second;
    queue.erase(queue.begin());
    order.push_back(p);
    const std::vector<Index> nb = std::move(adj[p]);
    adj[p].clear();
    for (Index u : nb) {
      queue.erase({static_cast<Index>(adj[u].size()), u});
      merged.clear();
      std::set_union(adj[u].begin(), adj[u].end(), nb.begin(), nb.end(),
                     std::back_inserter(merged));
      std::erase_if(merged, [&](Index w) { return w == u || w == p; });
      adj[u].swap(merged);
      queue.insert({static_cast<Index>(adj[u].size()), u});
    }
  }
  return Permutation(std::move(order));
}

Index symbolic_factor_nnz(const SparseMatrix& s, const Permutation& order) {
  const auto adj = symmetric_adjacency(s);
  const Index n = s.ncols();
  if (order.size() != n) throw DimensionError("ordering size does not match the matrix");
  const auto pinv = order.inverse();
  std::vector<std::vector<Index>> structure(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) {
    for (Index w : adj[order[k]])
      if (pinv[w] > k) structure[k].push_back(pinv[w]);
  }
  Index total = 0;
  std::vector<Index> merged;
  for (Index k = 0; k < n; ++k) {
    auto& st = structure[k];
    std::sort(st.begin(), st.end());
    st.erase(std::unique(st.begin(), st.end()), st.end());
    total += static_cast<Index>(st.size()) + 1;
    if (st.empty()) continue;
    const Index parent = st.front();
    auto& ps = structure[parent];
    ps.insert(ps.end(), st.begin() + 1, st.end());
    std::vector<Index>().swap(st);
  }
  return total;
}

CholFactor cholesky(const SparseMatrix& s, const Permutation& order) {
  auto res = eliminate(s, order, Mode::cholesky, 0.0, false);
  auto as = assemble(res, s.ncols(), true);
  CholFactor f{std::move(as.L), Permutation(std::move(as.order)), 0};
  f.nnz_L = f.L.nnz();
  return f;
}

CholFactor cholesky(const SparseMatrix& s) { return cholesky(s, analyze_order(s)); }

LdlFactor ldlt(const SparseMatrix& k, const Permutation& order, double pivot_thr,
               bool allow_2x2) {
  if (pivot_thr < 0.0) throw std::invalid_argument("ldlt: pivot threshold must be >= 0");
  auto res = eliminate(k, order, Mode::ldlt, pivot_thr, allow_2x2);
  const Index n = k.ncols();
  LdlFactor f;
  f.d.reserve(static_cast<std::size_t>(n));
  f.offdiag.assign(static_cast<std::size_t>(n), 0.0);
  for (const auto& r : res.pivots) {
    f.d.push_back(r.d);
    if (r.partner >= 0) {
      f.offdiag[f.d.size() - 1] = r.offdiag;
      f.d.push_back(r.d2);
      f.used_2x2 = true;
    }
  }
  auto as = assemble(res, n, false);
  f.L = std::move(as.L);
  f.perm = Permutation(std::move(as.order));
  f.pivot_thr = pivot_thr;
  f.delayed_pivots = res.delayed;
  f.nnz_L = f.L.nnz();
  return f;
}

LdlFactor ldlt(const SparseMatrix& k, double pivot_thr, bool allow_2x2) {
  return ldlt(k, analyze_order(k), pivot_thr, allow_2x2);
}

std::vector<double> solve_chol(const CholFactor& f, std::span<const double> b) {
  check_len(b.size(), f.L.ncols(), "solve_chol: right-hand side length mismatch");
  auto x = f.perm.apply(b);
  lower_solve(f.L, x, false);
  lower_transpose_solve(f.L, x, false);
  return f.perm.apply_inverse(x);
}

std::vector<double> solve_ldlt(const LdlFactor& f, std::span<const double> b) {
  check_len(b.size(), f.size(), "solve_ldlt: right-hand side length mismatch");
  auto x = f.perm.apply(b);
  lower_solve(f.L, x, true);
  for (Index k = 0; k < f.size(); ++k) {
    if (f.offdiag[k] != 0.0) {
      const double a = f.d[k], bb = f.offdiag[k], c = f.d[k + 1];
      const double det = a * c - bb * bb;
      if (det == 0.0) throw SingularFactor("solve_ldlt: singular 2x2 block in D");
      const double x0 = x[k], x1 = x[k + 1];
      x[k] = (c * x0 - bb * x1) / det;
      x[k + 1] = (a * x1 - bb * x0) / det;
      ++k;
      continue;
    }
    if (f.d[k] == 0.0) throw SingularFactor("solve_ldlt: zero pivot in D");
    x[k] /= f.d[k];
  }
  lower_transpose_solve(f.L, x, true);
  return f.perm.apply_inverse(x);
}

std::vector<double> ldlt_half_solve(const LdlFactor& f, std::span<const double> b) {
  require_diagonal_d(f);
  check_len(b.size(), f.size(), "ldlt_half_solve: length mismatch");
  auto x = f.perm.apply(b);
  lower_solve(f.L, x, true);
  for (Index k = 0; k < f.size(); ++k) x[k] /= std::sqrt(std::abs(f.d[k]));
  return x;
}

std::vector<double> ldlt_half_solve_transpose(const LdlFactor& f,
                                              std::span<const double> y) {
  require_diagonal_d(f);
  check_len(y.size(), f.size(), "ldlt_half_solve_transpose: length mismatch");
  std::vector<double> x(y.begin(), y.end());
  for (Index k = 0; k < f.size(); ++k) x[k] /= std::sqrt(std::abs(f.d[k]));
  lower_transpose_solve(f.L, x, true);
  return f.perm.apply_inverse(x);
}

}  // namespace regsaddle
