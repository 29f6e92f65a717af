#include "regsaddle/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

namespace regsaddle {

NotPositiveDefinite::NotPositiveDefinite(Index pivot_index, double pivot_value)
    : std::runtime_error("matrix is not positive definite: pivot " +
                         std::to_string(pivot_value) + " at index " +
                         std::to_string(pivot_index)),
      pivot_index_(pivot_index),
      pivot_value_(pivot_value) {}

PivotBreakdown::PivotBreakdown(Index pivot_index, double pivot_value,
                               double threshold)
    : std::runtime_error("LDL^T pivot breakdown: no admissible pivot; last "
                         "candidate " +
                         std::to_string(pivot_index) + " has |d| = " +
                         std::to_string(std::abs(pivot_value)) +
                         " below threshold " + std::to_string(threshold)),
      pivot_index_(pivot_index) {}

ParseError::ParseError(std::size_t line, const std::string& reason)
    : std::runtime_error("line " + std::to_string(line) + ": " + reason),
      line_(line) {}

Unsupported::Unsupported(const std::string& feature)
    : std::runtime_error("unsupported feature: " + feature) {}

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw std::invalid_argument("SparseMatrix: " + what);
}

void require_dim(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace

SparseMatrix::SparseMatrix(Index nrows, Index ncols, std::vector<Index> col_ptr,
                           std::vector<Index> row_idx, std::vector<double> values,
                           Symmetry symmetry)
    : nrows_(nrows),
      ncols_(ncols),
      col_ptr_(std::move(col_ptr)),
      row_idx_(std::move(row_idx)),
      values_(std::move(values)),
      symmetry_(symmetry) {
  if (nrows_ < 0 || ncols_ < 0) invalid("negative dimension");
  if (col_ptr_.size() != static_cast<std::size_t>(ncols_) + 1)
    invalid("col_ptr must have ncols+1 entries");
  if (row_idx_.size() != values_.size())
    invalid("row_idx and values differ in length");
  if (col_ptr_.front() != 0) invalid("col_ptr[0] must be 0");
  if (col_ptr_.back() != static_cast<Index>(values_.size()))
    invalid("col_ptr[ncols] must equal nnz");
  if (symmetry_ == Symmetry::symmetric_lower && nrows_ != ncols_)
    invalid("symmetric storage requires a square matrix");
  for (Index j = 0; j < ncols_; ++j) {
    if (col_ptr_[j + 1] < col_ptr_[j]) invalid("col_ptr is decreasing");
    for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
      const Index i = row_idx_[p];
      if (i < 0 || i >= nrows_) invalid("row index out of range");
      if (p > col_ptr_[j] && row_idx_[p - 1] >= i)
        invalid("row indices must be strictly increasing within a column");
      if (symmetry_ == Symmetry::symmetric_lower && i < j)
        invalid("symmetric_lower matrix has an entry above the diagonal");
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(Index nrows, Index ncols,
                                         std::span<const Triplet> triplets,
                                         Symmetry symmetry) {
  if (symmetry == Symmetry::symmetric_lower && nrows != ncols)
    invalid("symmetric storage requires a square matrix");
  std::vector<Triplet> t(triplets.begin(), triplets.end());
  for (auto& e : t) {
    if (e.row < 0 || e.row >= nrows || e.col < 0 || e.col >= ncols)
      invalid("triplet index out of range");
    if (symmetry == Symmetry::symmetric_lower && e.row < e.col)
      std::swap(e.row, e.col);
  }
  std::stable_sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  std::vector<Index> col_ptr(static_cast<std::size_t>(ncols) + 1, 0);
  std::vector<Index> rows;
  std::vector<double> vals;
  rows.reserve(t.size());
  vals.reserve(t.size());
  for (std::size_t k = 0; k < t.size();) {
    const Index i = t[k].row;
    const Index j = t[k].col;
    double v = 0.0;
    while (k < t.size() && t[k].row == i && t[k].col == j) v += t[k++].value;
    rows.push_back(i);
    vals.push_back(v);
    ++col_ptr[j + 1];
  }
  std::partial_sum(col_ptr.begin(), col_ptr.end(), col_ptr.begin());
  return {nrows, ncols, std::move(col_ptr), std::move(rows), std::move(vals),
          symmetry};
}

SparseMatrix SparseMatrix::identity(Index n) {
  std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
  return diagonal(ones);
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> d) {
  const auto n = static_cast<Index>(d.size());
  std::vector<Index> col_ptr(d.size() + 1);
  std::iota(col_ptr.begin(), col_ptr.end(), 0);
  std::vector<Index> rows(d.size());
  std::iota(rows.begin(), rows.end(), 0);
  return {n,
          n,
          std::move(col_ptr),
          std::move(rows),
          std::vector<double>(d.begin(), d.end()),
          Symmetry::symmetric_lower};
}

SparseMatrix SparseMatrix::zero(Index nrows, Index ncols, Symmetry symmetry) {
  return {nrows, ncols, std::vector<Index>(static_cast<std::size_t>(ncols) + 1, 0),
          {}, {}, symmetry};
}

double SparseMatrix::coeff(Index i, Index j) const {
  if (i < 0 || i >= nrows_ || j < 0 || j >= ncols_)
    throw DimensionError("coeff: index out of range");
  if (symmetry_ == Symmetry::symmetric_lower && i < j) std::swap(i, j);
  const auto rows = col_rows(j);
  const auto it = std::lower_bound(rows.begin(), rows.end(), i);
  if (it == rows.end() || *it != i) return 0.0;
  return values_[col_ptr_[j] + (it - rows.begin())];
}

std::vector<double> SparseMatrix::diagonal_values() const {
  require_dim(nrows_ == ncols_, "diagonal_values: matrix is not square");
  std::vector<double> d(static_cast<std::size_t>(nrows_), 0.0);
  for (Index j = 0; j < ncols_; ++j)
    for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p)
      if (row_idx_[p] == j) d[j] = values_[p];
  return d;
}

bool SparseMatrix::is_structurally_diagonal() const {
  for (Index j = 0; j < ncols_; ++j)
    for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p)
      if (row_idx_[p] != j) return false;
  return true;
}

SparseMatrix SparseMatrix::transpose() const {
  if (symmetry_ == Symmetry::symmetric_lower) return *this;
  std::vector<Index> col_ptr(static_cast<std::size_t>(nrows_) + 1, 0);
  for (Index i : row_idx_) ++col_ptr[i + 1];
  std::partial_sum(col_ptr.begin(), col_ptr.end(), col_ptr.begin());
  std::vector<Index> next(col_ptr.begin(), col_ptr.end() - 1);
  std::vector<Index> rows(values_.size());
  std::vector<double> vals(values_.size());
  for (Index j = 0; j < ncols_; ++j) {
    for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
      const Index q = next[row_idx_[p]]++;
      rows[q] = j;
      vals[q] = values_[p];
    }
  }
  return {ncols_, nrows_, std::move(col_ptr), std::move(rows), std::move(vals)};
}

SparseMatrix SparseMatrix::expand_symmetric() const {
  if (symmetry_ == Symmetry::general) return *this;
  std::vector<Triplet> t;
  t.reserve(2 * values_.size());
  for (Index j = 0; j < ncols_; ++j) {
    for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
      t.push_back({row_idx_[p], j, values_[p]});
      if (row_idx_[p] != j) t.push_back({j, row_idx_[p], values_[p]});
    }
  }
  return from_triplets(nrows_, ncols_, t, Symmetry::general);
}

std::vector<double> SparseMatrix::to_dense() const {
  std::vector<double> d(static_cast<std::size_t>(nrows_) * ncols_, 0.0);
  for (Index j = 0; j < ncols_; ++j) {
    for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
      const Index i = row_idx_[p];
      d[static_cast<std::size_t>(i) * ncols_ + j] = values_[p];
      if (symmetry_ == Symmetry::symmetric_lower)
        d[static_cast<std::size_t>(j) * ncols_ + i] = values_[p];
    }
  }
  return d;
}

Permutation::Permutation(std::vector<Index> forward) : forward_(std::move(forward)) {
  std::vector<char> seen(forward_.size(), 0);
  for (Index v : forward_) {
    if (v < 0 || v >= static_cast<Index>(forward_.size()) || seen[v])
      throw std::invalid_argument("Permutation: not a bijection");
    seen[v] = 1;
  }
}

Permutation Permutation::identity(Index n) {
  std::vector<Index> f(static_cast<std::size_t>(n));
  std::iota(f.begin(), f.end(), 0);
  return Permutation(std::move(f));
}

Permutation Permutation::inverse() const {
  std::vector<Index> inv(forward_.size());
  for (std::size_t k = 0; k < forward_.size(); ++k) inv[forward_[k]] = static_cast<Index>(k);
  return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation& other) const {
  require_dim(other.size() == size(), "Permutation::compose: size mismatch");
  std::vector<Index> f(forward_.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = other.forward_[forward_[k]];
  return Permutation(std::move(f));
}

std::vector<double> Permutation::apply(std::span<const double> x) const {
  require_dim(x.size() == forward_.size(), "Permutation::apply: size mismatch");
  std::vector<double> y(x.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = x[forward_[k]];
  return y;
}

std::vector<double> Permutation::apply_inverse(std::span<const double> y) const {
  require_dim(y.size() == forward_.size(),
              "Permutation::apply_inverse: size mismatch");
  std::vector<double> x(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) x[forward_[k]] = y[k];
  return x;
}

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x,
                         bool transpose) {
  const bool sym = a.is_symmetric();
  const Index in_dim = (transpose && !sym) ? a.nrows() : a.ncols();
  const Index out_dim = (transpose && !sym) ? a.ncols() : a.nrows();
  if (static_cast<Index>(x.size()) != in_dim) {
    std::ostringstream msg;
    msg << "spmv: vector of length " << x.size() << " does not match "
        << (transpose ? "A^T" : "A") << " with " << in_dim << " columns";
    throw DimensionError(msg.str());
  }
  std::vector<double> y(static_cast<std::size_t>(out_dim), 0.0);
  const auto cp = a.col_ptr();
  const auto ri = a.row_idx();
  const auto va = a.values();
  for (Index j = 0; j < a.ncols(); ++j) {
    if (sym) {
      double acc = 0.0;
      for (Index p = cp[j]; p < cp[j + 1]; ++p) {
        const Index i = ri[p];
        y[i] += va[p] * x[j];
        if (i != j) acc += va[p] * x[i];
      }
      y[j] += acc;
    } else if (transpose) {
      double acc = 0.0;
      for (Index p = cp[j]; p < cp[j + 1]; ++p) acc += va[p] * x[ri[p]];
      y[j] = acc;
    } else {
      const double xj = x[j];
      if (xj == 0.0) continue;
      for (Index p = cp[j]; p < cp[j + 1]; ++p) y[ri[p]] += va[p] * xj;
    }
  }
  return y;
}

SparseMatrix extract_columns(const SparseMatrix& a, std::span<const Index> cols) {
  if (a.is_symmetric()) return extract_columns(a.expand_symmetric(), cols);
  std::vector<Index> col_ptr{0};
  std::vector<Index> rows;
  std::vector<double> vals;
  col_ptr.reserve(cols.size() + 1);
  for (Index j : cols) {
    if (j < 0 || j >= a.ncols())
      throw DimensionError("extract_columns: column index " + std::to_string(j) +
                           " out of range");
    const auto r = a.col_rows(j);
    const auto v = a.col_values(j);
    rows.insert(rows.end(), r.begin(), r.end());
    vals.insert(vals.end(), v.begin(), v.end());
    col_ptr.push_back(static_cast<Index>(rows.size()));
  }
  return {a.nrows(), static_cast<Index>(cols.size()), std::move(col_ptr),
          std::move(rows), std::move(vals)};
}

SparseMatrix extract_submatrix(const SparseMatrix& a, std::span<const Index> rows,
                               std::span<const Index> cols) {
  if (a.is_symmetric()) return extract_submatrix(a.expand_symmetric(), rows, cols);
  std::vector<Index> new_row(static_cast<std::size_t>(a.nrows()), -1);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= a.nrows())
      throw DimensionError("extract_submatrix: row index out of range");
    new_row[rows[k]] = static_cast<Index>(k);
  }
  std::vector<Triplet> t;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const Index j = cols[c];
    if (j < 0 || j >= a.ncols())
      throw DimensionError("extract_submatrix: column index out of range");
    const auto r = a.col_rows(j);
    const auto v = a.col_values(j);
    for (std::size_t p = 0; p < r.size(); ++p)
      if (new_row[r[p]] >= 0) t.push_back({new_row[r[p]], static_cast<Index>(c), v[p]});
  }
  return SparseMatrix::from_triplets(static_cast<Index>(rows.size()),
                                     static_cast<Index>(cols.size()), t);
}

SparseMatrix extract_principal(const SparseMatrix& s, std::span<const Index> idx) {
  if (!s.is_symmetric())
    throw std::invalid_argument("extract_principal: expects symmetric_lower storage");
  std::vector<Index> pos(static_cast<std::size_t>(s.ncols()), -1);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= s.ncols())
      throw DimensionError("extract_principal: index out of range");
    pos[idx[k]] = static_cast<Index>(k);
  }
  std::vector<Triplet> t;
  for (Index j = 0; j < s.ncols(); ++j) {
    if (pos[j] < 0) continue;
    const auto r = s.col_rows(j);
    const auto v = s.col_values(j);
    for (std::size_t p = 0; p < r.size(); ++p)
      if (pos[r[p]] >= 0) t.push_back({pos[r[p]], pos[j], v[p]});
  }
  const auto n = static_cast<Index>(idx.size());
  return SparseMatrix::from_triplets(n, n, t, Symmetry::symmetric_lower);
}

SparseMatrix permute_symmetric(const SparseMatrix& s, const Permutation& p) {
  require_dim(s.is_symmetric() && p.size() == s.ncols(),
              "permute_symmetric: needs symmetric_lower S matching the permutation");
  const auto pinv = p.inverse();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(s.nnz()));
  for (Index j = 0; j < s.ncols(); ++j) {
    const auto r = s.col_rows(j);
    const auto v = s.col_values(j);
    for (std::size_t q = 0; q < r.size(); ++q) t.push_back({pinv[r[q]], pinv[j], v[q]});
  }
  return SparseMatrix::from_triplets(s.nrows(), s.ncols(), t,
                                     Symmetry::symmetric_lower);
}

SparseMatrix normal_matrix(const SparseMatrix& a, std::span<const double> g,
                           double delta) {
  if (a.is_symmetric()) return normal_matrix(a.expand_symmetric(), g, delta);
  require_dim(static_cast<Index>(g.size()) == a.ncols(),
              "normal_matrix: length of g must equal ncols(A)");
  if (!(delta > 0.0)) throw std::invalid_argument("normal_matrix: delta must be > 0");
  for (double gj : g)
    if (!(gj > 0.0))
      throw std::invalid_argument("normal_matrix: g must be entrywise positive");

  const Index m = a.nrows();
  const SparseMatrix at = a.transpose();  // column i of at = row i of A
  std::vector<double> work(static_cast<std::size_t>(m), 0.0);
  std::vector<Index> mark(static_cast<std::size_t>(m), -1);
  std::vector<Index> pattern;
  std::vector<Index> col_ptr{0};
  std::vector<Index> rows;
  std::vector<double> vals;
  for (Index i = 0; i < m; ++i) {
    pattern.clear();
    mark[i] = i;
    pattern.push_back(i);
    work[i] = delta;
    const auto cols = at.col_rows(i);
    const auto avals = at.col_values(i);
    for (std::size_t q = 0; q < cols.size(); ++q) {
      const Index j = cols[q];
      const double s = avals[q] * g[j];
      const auto r = a.col_rows(j);
      const auto v = a.col_values(j);
      for (std::size_t p = 0; p < r.size(); ++p) {
        const Index k = r[p];
        if (k < i) continue;
        if (mark[k] != i) {
          mark[k] = i;
          work[k] = 0.0;
          pattern.push_back(k);
        }
        work[k] += s * v[p];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (Index k : pattern) {
      rows.push_back(k);
      vals.push_back(work[k]);
    }
    col_ptr.push_back(static_cast<Index>(rows.size()));
  }
  return {m, m, std::move(col_ptr), std::move(rows), std::move(vals),
          Symmetry::symmetric_lower};
}

SparseMatrix add_diagonal(const SparseMatrix& s, std::span<const double> d,
                          double alpha) {
  require_dim(s.is_symmetric(), "add_diagonal: expects symmetric_lower storage");
  require_dim(d.empty() || static_cast<Index>(d.size()) == s.ncols(),
              "add_diagonal: length mismatch");
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(s.nnz()) + d.size());
  for (Index j = 0; j < s.ncols(); ++j) {
    const auto r = s.col_rows(j);
    const auto v = s.col_values(j);
    for (std::size_t p = 0; p < r.size(); ++p) t.push_back({r[p], j, alpha * v[p]});
  }
  for (std::size_t j = 0; j < d.size(); ++j)
    t.push_back({static_cast<Index>(j), static_cast<Index>(j), d[j]});
  return SparseMatrix::from_triplets(s.nrows(), s.ncols(), t,
                                     Symmetry::symmetric_lower);
}

NnzProfile nnz_profile(const SparseMatrix& a) {
  NnzProfile prof;
  prof.col_counts.assign(static_cast<std::size_t>(a.ncols()), 0);
  prof.row_counts.assign(static_cast<std::size_t>(a.nrows()), 0);
  for (Index j = 0; j < a.ncols(); ++j) {
    for (Index i : a.col_rows(j)) {
      ++prof.col_counts[j];
      ++prof.row_counts[i];
      if (a.is_symmetric() && i != j) {
        ++prof.col_counts[i];
        ++prof.row_counts[j];
      }
    }
  }
  return prof;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_dim(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double v : a) s += (v / scale) * (v / scale);
  return scale * std::sqrt(s);
}

double norm_inf(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_dim(x.size() == y.size(), "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace regsaddle
