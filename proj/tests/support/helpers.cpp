#include "helpers.hpp"

#include <cmath>

namespace testing {

regsaddle::SparseMatrix random_sparse(Rng& rng, int m, int n, double density) {
  std::vector<regsaddle::Triplet> t;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i)
      if (rng.uniform() < density) t.push_back({i, j, rng.uniform(-1.0, 1.0)});
  return regsaddle::SparseMatrix::from_triplets(m, n, t);
}

regsaddle::SparseMatrix random_symmetric(Rng& rng, int n, double density, double diag_shift) {
  std::vector<regsaddle::Triplet> t;
  for (int j = 0; j < n; ++j) {
    t.push_back({j, j, diag_shift + rng.uniform(-1.0, 1.0)});
    for (int i = j + 1; i < n; ++i)
      if (rng.uniform() < density) t.push_back({i, j, rng.uniform(-1.0, 1.0)});
  }
  return regsaddle::SparseMatrix::from_triplets(n, n, t, regsaddle::Symmetry::symmetric_lower);
}

MatrixXd to_dense(const regsaddle::SparseMatrix& a) {
  MatrixXd d = MatrixXd::Zero(a.nrows(), a.ncols());
  for (int j = 0; j < a.ncols(); ++j) {
    const auto r = a.col_rows(j);
    const auto v = a.col_values(j);
    for (std::size_t k = 0; k < r.size(); ++k) {
      d(r[k], j) += v[k];
      if (a.is_symmetric() && r[k] != j) d(j, r[k]) += v[k];
    }
  }
  return d;
}

VectorXd as_eigen(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace testing
