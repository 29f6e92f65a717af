#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "regsaddle/precond.hpp"
#include "regsaddle/qp_model.hpp"
#include "regsaddle/spectra.hpp"

using namespace regsaddle;
using testing::Rng;
using testing::to_dense;

namespace {

SparseMatrix full_rank_a(Rng& rng, int m, int n, double density) {
  std::vector<Triplet> t;
  for (int i = 0; i < m; ++i) t.push_back({i, i, 2.0 + rng.uniform()});
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i)
      if (i != j && rng.uniform() < density) t.push_back({i, j, rng.uniform(-1, 1)});
  return SparseMatrix::from_triplets(m, n, t);
}

SparseMatrix psd_q(Rng& rng, int n) {
  const Eigen::MatrixXd r = to_dense(testing::random_sparse(rng, n, n, 0.3));
  Eigen::MatrixXd q = r.transpose() * r;
  for (int j = 0; j < n; ++j) q(j, j) += std::pow(10.0, rng.uniform(-2, 2));
  std::vector<Triplet> t;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i)
      if (q(i, j) != 0.0) t.push_back({i, j, q(i, j)});
  return SparseMatrix::from_triplets(n, n, t, Symmetry::symmetric_lower);
}

}  // namespace

TEST_CASE("dense_eigs small cases") {
  const std::vector<double> d{3, 0, 0, 0, 1, 0, 0, 0, 2};
  CHECK(dense_eigs(d, 3) == std::vector<double>{1, 2, 3});
  std::vector<double> id(16, 0.0);
  for (int i = 0; i < 4; ++i) id[i * 5] = 1.0;
  for (double e : dense_eigs(id, 4)) CHECK(e == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(dense_eigs(std::vector<double>(501 * 501, 0.0), 501), DimensionError);
}

TEST_CASE("dense_eigs trace and Frobenius identities") {
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<double> s(64);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j <= i; ++j) s[i * 8 + j] = s[j * 8 + i] = rng.uniform(-3, 3);
    const auto ev = dense_eigs(s, 8);
    double tr = 0.0, fro = 0.0, sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < 8; ++i) tr += s[i * 9];
    for (double v : s) fro += v * v;
    for (double e : ev) {
      sum += e;
      sum2 += e * e;
    }
    CHECK(std::abs(sum - tr) <= 1e-10 * std::sqrt(fro));
    CHECK(std::abs(sum2 - fro) <= 1e-10 * fro);
    CHECK(std::is_sorted(ev.begin(), ev.end()));
  }
}

TEST_CASE("pne with nothing dropped has only unit eigenvalues") {
  Rng rng(1);
  NeInstance inst{full_rank_a(rng, 6, 12, 0.3), rng.vec(12, 0.1, 2.0), 1e-2};
  const auto rep = check_pne_intervals(inst, make_plan(6, 12, {}, {}));
  CHECK(rep.pass);
  CHECK(rep.unit_count == 6);
  CHECK(rep.guaranteed_unit_count == 6);
  for (double e : rep.eigenvalues) CHECK(std::abs(e - 1.0) <= kUnitTol);
}

TEST_CASE("pne intervals and unit counts on random instances") {
  for (int seed = 0; seed < 16; ++seed) {
    Rng rng(100 + seed);
    const int m = 8 + rng.index(8), n = 2 * m;
    const auto a = full_rank_a(rng, m, n, 0.25);
    std::vector<double> g(n);
    for (auto& x : g) x = std::pow(10.0, rng.uniform(-4, 4));
    NeInstance inst{a, g, seed % 2 ? 1e-2 : 1e-4};
    const int kc = seed % 4, kr = (seed / 4) % 4;
    std::vector<Index> drop, rows;
    for (int k = 0; k < kc; ++k) drop.push_back(m + k);
    for (int k = 0; k < kr; ++k) rows.push_back(k);
    const auto rep = check_pne_intervals(inst, make_plan(m, n, drop, rows));
    INFO(format_report(rep));
    CHECK(rep.pass);
    CHECK(rep.unit_count >= std::max(m - (2 * kr + kc), 0));
    CHECK(rep.guaranteed_unit_count == std::max(m - (2 * kr + kc), 0));
    // the report's own interval check, repeated here against its endpoints
    for (double e : rep.eigenvalues) {
      bool inside = false;
      for (const auto& iv : rep.intervals)
        inside = inside || (e >= iv.lo * (1 - kEndpointRelTol) - kUnitTol &&
                            e <= iv.hi * (1 + kEndpointRelTol) + kUnitTol);
      CHECK(inside);
    }
  }
}

TEST_CASE("scalar example sits on the upper endpoint") {
  const Triplet t[] = {{0, 0, 1.0}, {0, 1, 1.0}};
  NeInstance inst{SparseMatrix::from_triplets(1, 2, t), {1.0, 1e-6}, 0.1};
  const auto rep = check_pne_intervals(inst, make_plan(1, 2, {1}, {}));
  CHECK(rep.pass);
  REQUIRE(rep.eigenvalues.size() == 1);
  const double endpoint = 1.0 + 1e-6 / 1.1;
  CHECK(rep.eigenvalues[0] == doctest::Approx(endpoint).epsilon(1e-12));
  CHECK(rep.intervals[0].hi == doctest::Approx(endpoint).epsilon(1e-12));
}

TEST_CASE("pas exact blocks give the limiting intervals") {
  Rng rng(2);
  const int n = 6, m = 3;
  std::vector<double> qd(n);
  for (auto& x : qd) x = rng.uniform(0.5, 2.0);
  SaddleInstance inst{full_rank_a(rng, m, n, 0.4), SparseMatrix::diagonal(qd), 1e-2, 1e-2};
  const auto rep = check_pas_intervals(inst, make_plan(m, n, {}, {}), HessianMode::diag_all);
  CHECK(rep.pass);
  CHECK(rep.alpha_f == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.beta_f == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.alpha_ne == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(rep.beta_ne == doctest::Approx(1.0).epsilon(1e-10));
  REQUIRE(rep.intervals.size() == 2);
  CHECK(rep.intervals[0].lo == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(rep.intervals[0].hi == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(rep.intervals[1].lo == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-9));
  // 1 + sqrt(beta_NE - 1): rounding in beta_NE is amplified by the square root
  CHECK(rep.intervals[1].hi == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.trace_mean == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pas n=m=1 roots of the characteristic quadratic") {
  // blocks exact: gamma_F = gamma_NE = 1, and P^{-1}K on (x, y) has
  // eigenvalues solving lambda^2 + (1 - omega) lambda - 1 = 0 for
  // omega = A F^{-1} A^T / M = 1/2
  const Triplet t[] = {{0, 0, 1.0}};
  SaddleInstance inst{SparseMatrix::from_triplets(1, 1, t),
                      SparseMatrix::zero(1, 1, Symmetry::symmetric_lower), 1.0, 1.0};
  const auto rep = check_pas_intervals(inst, make_plan(1, 1, {}, {}), HessianMode::diag_all);
  CHECK(rep.pass);
  REQUIRE(rep.eigenvalues.size() == 2);
  const double w = 0.5;
  const double disc = std::sqrt((1 - w) * (1 - w) + 4.0);
  CHECK(rep.eigenvalues[0] == doctest::Approx((-(1 - w) - disc) / 2).epsilon(1e-12));
  CHECK(rep.eigenvalues[1] == doctest::Approx((-(1 - w) + disc) / 2).epsilon(1e-12));
}

TEST_CASE("pas random instances in both block modes") {
  for (int seed = 0; seed < 12; ++seed) {
    Rng rng(300 + seed);
    const int m = 4 + rng.index(5), n = 2 * m;
    SaddleInstance inst{full_rank_a(rng, m, n, 0.3), psd_q(rng, n), seed % 2 ? 1e-2 : 1e-4,
                        seed % 3 ? 1e-2 : 1e-4};
    std::vector<Index> drop;
    for (int k = 0; k < seed % 3; ++k) drop.push_back(n - 1 - k);
    const std::vector<Index> rows = seed % 2 ? std::vector<Index>{0} : std::vector<Index>{};
    const auto d = check_pas_intervals(inst, make_plan(m, n, drop, rows), HessianMode::diag_all);
    INFO(format_report(d));
    CHECK(d.pass);
    CHECK(d.trace_mean == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(d.alpha_f <= 1.0 + 1e-12);
    CHECK(d.beta_f >= 1.0 - 1e-12);
    const auto b = check_pas_intervals(inst, make_plan(m, n, drop, {}),
                                       HessianMode::diag_on_n_full_on_b);
    INFO(format_report(b));
    CHECK(b.pass);
    CHECK(b.trace_mean == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("pk spectrum") {
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(400 + seed);
    const int n = 4, m = 3;
    SaddleInstance inst{full_rank_a(rng, m, n, 0.5), psd_q(rng, n), 1e-2, 1e-2};
    const auto exact = check_pk_spectrum(inst, make_plan(m, n, {}, {}));
    CHECK(exact.pass);
    CHECK(exact.unit_count == n + m);
    int neg = 0;
    for (double e : exact.eigenvalues) neg += e < 0;
    CHECK(neg == n);

    const auto drop = check_pk_spectrum(inst, make_plan(m, n, {3}, {}));
    INFO(format_report(drop));
    CHECK(drop.pass);
    CHECK(drop.unit_count >= n + m - 3);
  }
}

TEST_CASE("pk on the 2x2 hand example") {
  const Triplet t[] = {{0, 0, 1.0}};
  SaddleInstance inst{SparseMatrix::from_triplets(1, 1, t),
                      SparseMatrix::zero(1, 1, Symmetry::symmetric_lower), 1.0, 1.0};
  const auto rep = check_pk_spectrum(inst, make_plan(1, 1, {}, {}));
  REQUIRE(rep.eigenvalues.size() == 2);
  CHECK(rep.eigenvalues[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(rep.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("LP bound") {
  Rng rng(5);
  const auto a = full_rank_a(rng, 5, 10, 0.3);
  NeInstance inst{a, rng.vec(10, 0.1, 2.0), 1e-2};
  const auto none = check_lp_bound(inst, Partition{{}, {}, {}});
  CHECK(none.pass);
  for (double e : none.eigenvalues) CHECK(std::abs(e - 1.0) <= 1e-9);

  const Triplet t[] = {{0, 0, 1.0}, {0, 1, 1.0}};
  NeInstance scalar{SparseMatrix::from_triplets(1, 2, t), {1.0, 1e-6}, 0.1};
  const auto s = check_lp_bound(scalar, Partition{{0}, {1}, {}});
  CHECK(s.pass);
  // sigma_max(A)^2 = 2, so the bound is 1 + 2e-5 while the eigenvalue is 1 + 1e-6/1.1
  CHECK(s.intervals[0].hi == doctest::Approx(1.0 + 2e-6 / 0.1).epsilon(1e-12));
  CHECK(s.eigenvalues[0] == doctest::Approx(1.0 + 1e-6 / 1.1).epsilon(1e-12));

  for (int seed = 0; seed < 10; ++seed) {
    Rng r(500 + seed);
    const int m = 6, n = 14;
    std::vector<double> g(n);
    for (auto& x : g) x = std::pow(10.0, r.uniform(-6, 3));
    NeInstance in{full_rank_a(r, m, n, 0.3), g, 1e-3};
    const auto part = partition_variables(g, 1e-3, 1.0);
    const auto rep = check_lp_bound(in, part);
    CHECK(rep.pass);
    CHECK(rep.eigenvalues.front() >= 1.0 - 1e-10);
  }
}

TEST_CASE("format_report is one line") {
  Rng rng(6);
  NeInstance inst{full_rank_a(rng, 3, 6, 0.3), rng.vec(6, 0.1, 1.0), 1e-2};
  const auto line = format_report(check_pne_intervals(inst, make_plan(3, 6, {5}, {})));
  CHECK(line.find('\n') == std::string::npos);
  CHECK(line.find("PASS") != std::string::npos);
}
