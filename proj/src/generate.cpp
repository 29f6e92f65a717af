#include "regsaddle/generate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace regsaddle {

namespace {

// Portable across standard libraries, unlike the std distributions.
double uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Index uniform_index(std::mt19937_64& rng, Index bound) {
  return static_cast<Index>(rng() % static_cast<std::uint64_t>(bound));
}

double entry(std::mt19937_64& rng) {
  const double v = 0.5 + uniform(rng);
  return (rng() & 1U) ? v : -v;
}

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, static_cast<Index>(i))]);
}

}  // namespace

ProblemQP generate_problem(const GenOptions& o) {
  if (o.m <= 0 || o.n <= 0) throw std::invalid_argument("gen: m and n must be positive");
  if (o.m > o.n) throw std::invalid_argument("gen: m must not exceed n");
  if (o.dense_cols < 0 || o.dense_cols > o.n - o.m)
    throw std::invalid_argument("gen: dense_cols must lie in [0, n - m]");
  if (o.dense_rows < 0 || o.dense_rows > o.m)
    throw std::invalid_argument("gen: dense_rows must lie in [0, m]");
  if (!(o.density > 0.0 && o.density <= 1.0)) throw std::invalid_argument("gen: density must lie in (0, 1]");
  if (!(o.cond >= 1.0)) throw std::invalid_argument("gen: cond must be at least 1");

  std::mt19937_64 rng(o.seed);
  const Index m = o.m, n = o.n;

  // Columns 0..m-1 carry the diagonal (i, i); dense columns come from the rest.
  std::vector<Index> pool(static_cast<std::size_t>(n - m));
  std::iota(pool.begin(), pool.end(), m);
  shuffle(pool, rng);
  std::vector<char> dense_col(static_cast<std::size_t>(n), 0);
  for (Index k = 0; k < o.dense_cols; ++k) dense_col[pool[k]] = 1;

  std::vector<Index> row_order(static_cast<std::size_t>(m));
  std::iota(row_order.begin(), row_order.end(), 0);
  shuffle(row_order, rng);
  std::vector<char> dense_row(static_cast<std::size_t>(m), 0);
  for (Index k = 0; k < o.dense_rows; ++k) dense_row[row_order[k]] = 1;

  const Index cap = std::max<Index>(1, m / 2);
  std::vector<double> scale(static_cast<std::size_t>(n));
  for (auto& s : scale) s = std::pow(o.cond, uniform(rng));

  std::vector<Triplet> t;
  std::vector<char> used(static_cast<std::size_t>(m));
  for (Index j = 0; j < n; ++j) {
    if (dense_col[j]) {
      for (Index i = 0; i < m; ++i) t.push_back({i, j, scale[j] * entry(rng)});
      continue;
    }
    std::fill(used.begin(), used.end(), 0);
    Index count = 0;
    auto put = [&](Index i, double v) {
      if (used[i]) return;
      used[i] = 1;
      ++count;
      t.push_back({i, j, scale[j] * v});
    };
    for (Index i = 0; i < m; ++i)
      if (dense_row[i]) put(i, entry(rng));
    if (j < m) put(j, (rng() & 1U) ? 2.0 + uniform(rng) : -2.0 - uniform(rng));
    const Index target = std::min<Index>(
        cap, std::max<Index>(1, static_cast<Index>(std::lround(o.density * m))));
    for (Index tries = 0; count < target && tries < 4 * m; ++tries) put(uniform_index(rng, m), entry(rng));
  }
  auto a = SparseMatrix::from_triplets(m, n, t);

  SparseMatrix h;
  if (o.qp) {
    // PSD by construction: a nonnegative diagonal plus PSD 2x2 blocks
    std::vector<Triplet> ht;
    for (Index j = 0; j < n; ++j) ht.push_back({j, j, uniform(rng)});
    for (Index k = 0; k < n / 2; ++k) {
      const Index i = uniform_index(rng, n), j = uniform_index(rng, n);
      if (i == j) continue;
      const double p = 0.5 + uniform(rng), q = 0.5 + uniform(rng);
      const double off = (2.0 * uniform(rng) - 1.0) * std::sqrt(p * q);
      ht.push_back({i, i, p});
      ht.push_back({j, j, q});
      ht.push_back({std::max(i, j), std::min(i, j), off});
    }
    h = SparseMatrix::from_triplets(n, n, ht, Symmetry::symmetric_lower);
  } else {
    h = SparseMatrix::from_triplets(n, n, {}, Symmetry::symmetric_lower);
  }

  // b = A x0, c = A^T y0 + z0 - H x0 with x0, z0 > 0: both sides strictly feasible
  std::vector<double> x0(static_cast<std::size_t>(n)), z0(static_cast<std::size_t>(n)),
      y0(static_cast<std::size_t>(m));
  for (auto& v : x0) v = 0.1 + uniform(rng);
  for (auto& v : z0) v = 0.1 + uniform(rng);
  for (auto& v : y0) v = 2.0 * uniform(rng) - 1.0;
  auto b = spmv(a, x0);
  auto c = spmv(a.transpose(), y0);
  const auto hx = spmv(h, x0);
  for (Index j = 0; j < n; ++j) c[j] += z0[j] - hx[j];

  return make_problem(std::move(a), std::move(b), std::move(c), std::move(h), {},
                      "gen" + std::to_string(o.seed));
}

}  // namespace regsaddle
