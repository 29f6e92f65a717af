#include "regsaddle/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "regsaddle/sparse.hpp"

namespace regsaddle {

namespace {

double true_relres(const LinearOperator& apply_a, std::span<const double> b,
                   std::span<const double> x, double bnorm, std::vector<double>* r_out) {
  auto ax = apply_a(x);
  for (std::size_t i = 0; i < ax.size(); ++i) ax[i] = b[i] - ax[i];
  const double rel = norm2(ax) / bnorm;
  if (r_out) *r_out = std::move(ax);
  return rel;
}

void check_rhs(const LinearOperator& a, const LinearOperator& p) {
  if (!a || !p) throw std::invalid_argument("krylov: operator not set");
}

}  // namespace

const char* to_string(KrylovStatus s) {
  switch (s) {
    case KrylovStatus::converged: return "converged";
    case KrylovStatus::max_iter: return "max_iter";
    case KrylovStatus::breakdown: return "breakdown";
  }
  return "?";
}

double adaptive_tol(double mu, double rhs_norm, double tol) {
  return std::min(1e-3, std::max(0.1 * mu, tol)) / std::max(1.0, rhs_norm);
}

KrylovResult pcg(const LinearOperator& apply_a, const LinearOperator& apply_pinv,
                 std::span<const double> b, double tol, Index max_iter,
                 const IterationSink& sink) {
  check_rhs(apply_a, apply_pinv);
  const std::size_t n = b.size();
  KrylovResult res;
  res.solution.assign(n, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    res.status = KrylovStatus::converged;
    return res;
  }
  auto& x = res.solution;
  std::vector<double> r(b.begin(), b.end());
  auto z = apply_pinv(r);
  std::vector<double> p = z;
  double rz = dot(r, z);

  for (Index k = 1; k <= max_iter; ++k) {
    const auto q = apply_a(p);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) {
      res.iterations = k;
      res.status = KrylovStatus::breakdown;
      break;
    }
    const double alpha = rz / pq;
    axpy(alpha, p, x);
    axpy(-alpha, q, r);
    double rel = norm2(r) / bnorm;
    res.iterations = k;
    res.residual_history.push_back(rel);
    if (sink) sink(k, rel);
    if (rel <= tol) {
      rel = true_relres(apply_a, b, x, bnorm, &r);
      if (rel <= tol) {
        res.status = KrylovStatus::converged;
        res.final_relres = rel;
        return res;
      }
    }
    z = apply_pinv(r);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  res.final_relres = true_relres(apply_a, b, x, bnorm, nullptr);
  if (res.status != KrylovStatus::breakdown)
    res.status = res.final_relres <= tol ? KrylovStatus::converged : KrylovStatus::max_iter;
  return res;
}

KrylovResult minres(const LinearOperator& apply_a, const LinearOperator& apply_pinv,
                    std::span<const double> b, double tol, Index max_iter,
                    const IterationSink& sink) {
  check_rhs(apply_a, apply_pinv);
  const std::size_t n = b.size();
  KrylovResult res;
  res.solution.assign(n, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    res.status = KrylovStatus::converged;
    return res;
  }
  auto& x = res.solution;

  std::vector<double> r1(b.begin(), b.end());
  std::vector<double> r2 = r1;
  std::vector<double> y = apply_pinv(r1);
  const double beta1_sq = dot(r1, y);
  if (!(beta1_sq > 0.0)) {
    res.status = KrylovStatus::breakdown;
    res.final_relres = 1.0;
    return res;
  }
  const double beta1 = std::sqrt(beta1_sq);
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  std::vector<double> v(n), w(n, 0.0), w1(n), w2(n, 0.0);
  std::vector<double> aw(n, 0.0), aw1(n), aw2(n, 0.0);
  std::vector<double> rt(b.begin(), b.end());  // unpreconditioned residual
  constexpr double tiny = std::numeric_limits<double>::epsilon();

  for (Index k = 1; k <= max_iter; ++k) {
    const double s = 1.0 / beta;
    for (std::size_t i = 0; i < n; ++i) v[i] = s * y[i];
    const auto av = apply_a(v);
    y = av;
    if (k >= 2) axpy(-beta / oldb, r1, y);
    const double alfa = dot(v, y);
    axpy(-alfa / beta, r2, y);
    r1.swap(r2);
    r2 = y;
    y = apply_pinv(r2);
    oldb = beta;
    const double beta_sq = dot(r2, y);
    if (beta_sq < 0.0) {
      res.iterations = k;
      res.status = KrylovStatus::breakdown;
      break;
    }
    beta = std::sqrt(beta_sq);
    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), tiny);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    w1.swap(w2);
    w2.swap(w);
    aw1.swap(aw2);
    aw2.swap(aw);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
      aw[i] = (av[i] - oldeps * aw1[i] - delta * aw2[i]) / gamma;
    }
    axpy(phi, w, x);
    axpy(-phi, aw, rt);

    res.iterations = k;
    res.residual_history.push_back(phibar / beta1);
    double rel = norm2(rt) / bnorm;
    if (sink) sink(k, rel);
    if (rel <= tol || beta == 0.0) {
      std::vector<double> fresh;
      rel = true_relres(apply_a, b, x, bnorm, &fresh);
      if (rel <= tol) {
        res.status = KrylovStatus::converged;
        res.final_relres = rel;
        return res;
      }
      if (beta == 0.0) {
        // Krylov space exhausted without reaching the tolerance
        res.status = KrylovStatus::breakdown;
        break;
      }
      rt = std::move(fresh);
    }
  }
  res.final_relres = true_relres(apply_a, b, x, bnorm, nullptr);
  if (res.status != KrylovStatus::breakdown)
    res.status = res.final_relres <= tol ? KrylovStatus::converged : KrylovStatus::max_iter;
  return res;
}

}  // namespace regsaddle
