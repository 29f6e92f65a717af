#pragma once

// Small utilities shared by the unit tests: random data and dense views.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "regsaddle/sparse.hpp"

namespace testing {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Rng {
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
  }
  double normal() { return std::normal_distribution<double>()(gen); }
  int index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(gen); }
  std::vector<double> vec(int n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }
  std::mt19937_64 gen;
};

/// Random general sparse matrix with about density*m*n entries.
regsaddle::SparseMatrix random_sparse(Rng& rng, int m, int n, double density);

/// Random symmetric_lower matrix; diagonal entries all stored.
regsaddle::SparseMatrix random_symmetric(Rng& rng, int n, double density, double diag_shift);

/// Dense copy of the represented operator (symmetric storage expanded).
MatrixXd to_dense(const regsaddle::SparseMatrix& a);

VectorXd as_eigen(const std::vector<double>& v);

double rel_diff(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace testing
