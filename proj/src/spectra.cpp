#include "regsaddle/spectra.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "regsaddle/qp_model.hpp"

namespace regsaddle {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

Mat to_eigen(const SparseMatrix& a) {
  const auto d = a.to_dense();
  Mat out(a.nrows(), a.ncols());
  for (Index i = 0; i < a.nrows(); ++i)
    for (Index j = 0; j < a.ncols(); ++j) out(i, j) = d[static_cast<std::size_t>(i) * a.ncols() + j];
  return out;
}

// Dense P^{-1} assembled column by column from the handle, symmetrized.
Mat dense_inverse(const PrecondHandle& h) {
  const Index n = h.dim();
  Mat out(n, n);
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  for (Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    const auto col = apply_inverse(h, e);
    for (Index i = 0; i < n; ++i) out(i, j) = col[i];
    e[j] = 0.0;
  }
  return 0.5 * (out + out.transpose());
}

// Lower factor L with S = L L^T for SPD S.
Mat spd_factor(const Mat& s) {
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("spectra: preconditioner inverse is not positive definite");
  return llt.matrixL();
}

std::vector<double> sym_eigs(const Mat& s) {
  if (s.rows() == 0) return {};
  Mat sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  const Vec& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

double lambda_max(const Mat& s) {
  const auto e = sym_eigs(s);
  return e.empty() ? 0.0 : e.back();
}

double lambda_min(const Mat& s) {
  const auto e = sym_eigs(s);
  return e.empty() ? 0.0 : e.front();
}

double sigma_max(const Mat& b) {
  if (b.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(b);
  return svd.singularValues()(0);
}

bool inside(double x, const Interval& iv) {
  return x >= iv.lo - kEndpointRelTol * std::abs(iv.lo) &&
         x <= iv.hi + kEndpointRelTol * std::abs(iv.hi);
}

Mat rows_cols(const Mat& a, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  Mat out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = a(rows[i], cols[j]);
  return out;
}

// 1 + eig(L^T E L) with P^{-1} = L L^T; returns the consistency residual of
// P^{-1} (Mhat - E) against I.
std::vector<double> unit_shifted_eigs(const Mat& pinv, const Mat& mhat, const Mat& e,
                                      double* consistency) {
  const Mat l = spd_factor(pinv);
  auto ev = sym_eigs(l.transpose() * e * l);
  for (double& v : ev) v += 1.0;
  const Index m = mhat.rows();
  const Mat p_explicit = mhat - e;
  *consistency = m ? (pinv * p_explicit - Mat::Identity(m, m)).cwiseAbs().maxCoeff() : 0.0;
  return ev;
}

Index count_units(const std::vector<double>& ev) {
  return static_cast<Index>(
      std::count_if(ev.begin(), ev.end(), [](double v) { return std::abs(v - 1.0) <= kUnitTol; }));
}

constexpr double kConsistencyTol = 1e-8;

}  // namespace

std::vector<double> dense_eigs(const std::vector<double>& s, Index dim) {
  if (dim > 500) throw DimensionError("dense_eigs: order above 500");
  if (static_cast<Index>(s.size()) != dim * dim) throw DimensionError("dense_eigs: size");
  Mat a(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) a(i, j) = s[static_cast<std::size_t>(i) * dim + j];
  return sym_eigs(a);
}

SpectralReport check_pne_intervals(const NeInstance& inst, const SparsificationPlan& plan) {
  const Index m = inst.A.nrows();
  if (m > 100) throw DimensionError("check_pne_intervals: m above 100");
  const auto handle = build_pne_chol(inst.A, inst.ghat, inst.delta, plan);

  Mat b = to_eigen(inst.A);
  for (Index j = 0; j < b.cols(); ++j) b.col(j) *= std::sqrt(inst.ghat[j]);
  const Mat mhat = b * b.transpose() + inst.delta * Mat::Identity(m, m);

  const auto rows_r = plan.sparsify_rows;
  const auto rows_s = plan.kept_rows();
  const auto kept = plan.kept_cols();
  const auto& dropped = plan.drop_cols;
  // Mhat - P: the R x S coupling and B21 B21^T on S x S
  Mat e = Mat::Zero(m, m);
  const Mat b21 = rows_cols(b, rows_s, dropped);
  const Mat b22 = rows_cols(b, rows_s, kept);
  const Mat b21b21 = b21 * b21.transpose();
  for (std::size_t u = 0; u < rows_s.size(); ++u)
    for (std::size_t v = 0; v < rows_s.size(); ++v) e(rows_s[u], rows_s[v]) = b21b21(u, v);
  for (Index i : rows_r)
    for (Index k : rows_s) {
      e(i, k) = mhat(i, k);
      e(k, i) = mhat(k, i);
    }

  SpectralReport rep;
  rep.label = "pne kc=" + std::to_string(plan.kc()) + " kr=" + std::to_string(plan.kr());
  rep.eigenvalues = unit_shifted_eigs(dense_inverse(handle), mhat, e, &rep.consistency);
  std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end());

  const double ratio = rows_s.empty() ? 0.0
                                      : lambda_max(b21b21) /
                                            (inst.delta + lambda_min(b22 * b22.transpose()));
  const double smax = sigma_max(b);
  const double lo = inst.delta / (inst.delta + smax * smax);
  Interval iv{1.0, 1.0};
  if (plan.kc() > 0 && plan.kr() > 0) iv = {lo, 2.0 + ratio};
  else if (plan.kc() > 0) iv = {1.0, 1.0 + ratio};
  else if (plan.kr() > 0) iv = {lo, 2.0};
  rep.intervals = {iv};
  rep.unit_count = count_units(rep.eigenvalues);
  rep.guaranteed_unit_count = handle.theory().guaranteed_unit;
  rep.pass = rep.consistency <= kConsistencyTol &&
             rep.unit_count >= rep.guaranteed_unit_count &&
             std::all_of(rep.eigenvalues.begin(), rep.eigenvalues.end(),
                         [&](double v) {
                           // kc = kr = 0: every eigenvalue is a unit one
                           return plan.kc() + plan.kr() == 0 ? std::abs(v - 1.0) <= kUnitTol
                                                             : inside(v, iv);
                         });
  return rep;
}

SpectralReport check_pas_intervals(const SaddleInstance& inst, const SparsificationPlan& plan,
                                   HessianMode mode) {
  const Index n = inst.A.ncols(), m = inst.A.nrows();
  if (n + m > 200) throw DimensionError("check_pas_intervals: n+m above 200");
  const std::vector<double> zeros(static_cast<std::size_t>(n), 0.0);
  const auto qhat = sparsify_hessian(inst.Q, zeros, inst.rho, plan, mode);

  std::shared_ptr<const PrecondHandle> ne;
  if (mode == HessianMode::diag_all) {
    std::vector<double> ghat(static_cast<std::size_t>(n));
    const auto qd = qhat.qhat.diagonal_values();
    for (Index j = 0; j < n; ++j) ghat[j] = 1.0 / (qd[j] + inst.rho);
    ne = std::make_shared<const PrecondHandle>(build_pne_chol(inst.A, ghat, inst.delta, plan));
  } else {
    ne = std::make_shared<const PrecondHandle>(
        build_pne_ldl(inst.A, inst.Q, zeros, inst.rho, inst.delta, plan));
  }
  const auto pas = build_pas(qhat, ne);

  const Mat a = to_eigen(inst.A);
  const Mat f = to_eigen(inst.Q) + inst.rho * Mat::Identity(n, n);
  const Mat fhat = to_eigen(qhat.qhat) + inst.rho * Mat::Identity(n, n);

  SpectralReport rep;
  rep.label = std::string("pas mode=") +
              (mode == HessianMode::diag_all ? "diag" : mode == HessianMode::diag_on_n_full_on_b
                                                             ? "block"
                                                             : "custom") +
              " kc=" + std::to_string(plan.kc()) + " kr=" + std::to_string(plan.kr());

  // alpha_F, beta_F from Fhat^{-1/2} F Fhat^{-1/2}
  {
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(f, fhat, Eigen::EigenvaluesOnly);
    const Vec& ev = ges.eigenvalues();
    rep.alpha_f = ev.minCoeff();
    rep.beta_f = ev.maxCoeff();
    rep.trace_mean = ev.mean();
  }
  // alpha_NE, beta_NE from P_NE^{-1/2} Mhat P_NE^{-1/2}, Mhat = A Fhat^{-1} A^T + delta I
  {
    const Mat mhat = a * fhat.llt().solve(a.transpose()) + inst.delta * Mat::Identity(m, m);
    const Mat l = spd_factor(dense_inverse(*ne));
    const auto ev = sym_eigs(l.transpose() * mhat * l);
    rep.alpha_ne = ev.front();
    rep.beta_ne = ev.back();
  }
  Mat k(n + m, n + m);
  k << -f, a.transpose(), a, inst.delta * Mat::Identity(m, m);
  const Mat pinv = dense_inverse(pas);
  {
    Mat p_explicit = Mat::Zero(n + m, n + m);
    p_explicit.topLeftCorner(n, n) = fhat;
    p_explicit.bottomRightCorner(m, m) = dense_inverse(*ne).inverse();
    rep.consistency = (pinv * p_explicit - Mat::Identity(n + m, n + m)).cwiseAbs().maxCoeff();
  }
  const Mat l = spd_factor(pinv);
  rep.eigenvalues = sym_eigs(l.transpose() * k * l);

  const double bf = rep.beta_f, af = rep.alpha_f;
  const Interval neg{-bf - std::sqrt(rep.beta_ne), -af};
  rep.clamped = rep.beta_ne < 1.0;
  const Interval pos{0.5 * (-bf + std::sqrt(bf * bf + 4.0 * rep.alpha_ne)),
                     1.0 + std::sqrt(std::max(rep.beta_ne - 1.0, 0.0))};
  rep.intervals = {neg, pos};
  rep.pass = std::abs(rep.trace_mean - 1.0) <= 1e-10 && rep.consistency <= kConsistencyTol &&
             std::all_of(rep.eigenvalues.begin(), rep.eigenvalues.end(),
                         [&](double v) { return inside(v, neg) || inside(v, pos); });
  return rep;
}

SpectralReport check_pk_spectrum(const SaddleInstance& inst, const SparsificationPlan& plan,
                                 double tol) {
  const Index n = inst.A.ncols(), m = inst.A.nrows();
  if (n + m > 200) throw DimensionError("check_pk_spectrum: n+m above 200");
  const std::vector<double> zeros(static_cast<std::size_t>(n), 0.0);
  const auto qhat =
      sparsify_hessian(inst.Q, zeros, inst.rho, plan, HessianMode::diag_on_n_full_on_b);
  const auto h = build_pk(inst.A, qhat, inst.delta, plan);
  const auto k = assemble_saddle(inst.A, inst.Q, inst.rho, inst.delta);

  const Index dim = n + m;
  Mat t(dim, dim);
  std::vector<double> e(static_cast<std::size_t>(dim), 0.0);
  for (Index j = 0; j < dim; ++j) {
    e[j] = 1.0;
    const auto col = pk_two_sided(h, k, e);
    for (Index i = 0; i < dim; ++i) t(i, j) = col[i];
    e[j] = 0.0;
  }
  SpectralReport rep;
  rep.label = "pk dropped=" + std::to_string(plan.kc());
  rep.eigenvalues = sym_eigs(t);
  rep.intervals = {{-1.0, -1.0}, {1.0, 1.0}};
  Index neg = 0, pos = 0;
  for (double v : rep.eigenvalues) {
    if (std::abs(v + 1.0) <= tol) ++neg;
    if (std::abs(v - 1.0) <= tol) ++pos;
  }
  rep.unit_count = neg + pos;
  rep.guaranteed_unit_count = h.theory().guaranteed_unit;
  rep.pass = rep.unit_count >= rep.guaranteed_unit_count;
  if (plan.kc() == 0 && qhat.kept_block_exact) rep.pass = rep.pass && neg == n && pos == m;
  return rep;
}

SpectralReport check_lp_bound(const NeInstance& inst, const Partition& partition) {
  const Index m = inst.A.nrows();
  const auto plan = make_plan(m, inst.A.ncols(), partition.nonbasic, {}, {}, partition);
  const auto handle = build_pne_chol(inst.A, inst.ghat, inst.delta, plan);
  const Mat a = to_eigen(inst.A);
  Mat b = a;
  for (Index j = 0; j < b.cols(); ++j) b.col(j) *= std::sqrt(inst.ghat[j]);
  const Mat mm = b * b.transpose() + inst.delta * Mat::Identity(m, m);
  const Mat bn = rows_cols(b, plan.kept_rows(), partition.nonbasic);
  const Mat e = bn * bn.transpose();

  SpectralReport rep;
  rep.label = "lp |N|=" + std::to_string(partition.nonbasic.size());
  rep.eigenvalues = unit_shifted_eigs(dense_inverse(handle), mm, e, &rep.consistency);
  std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end());
  double gmax = 0.0;
  for (Index j : partition.nonbasic) gmax = std::max(gmax, inst.ghat[j]);
  const double s = sigma_max(a);
  const Interval iv{1.0, 1.0 + gmax * s * s / inst.delta};
  rep.intervals = {iv};
  rep.unit_count = count_units(rep.eigenvalues);
  rep.guaranteed_unit_count = handle.theory().guaranteed_unit;
  rep.pass = rep.consistency <= kConsistencyTol &&
             std::all_of(rep.eigenvalues.begin(), rep.eigenvalues.end(), [&](double v) {
               return v >= iv.lo - 1e-10 && v <= iv.hi + 1e-9;
             });
  return rep;
}

std::string format_report(const SpectralReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << (r.pass ? "PASS " : "FAIL ") << r.label << " units=" << r.unit_count << '/'
     << r.guaranteed_unit_count;
  for (const auto& iv : r.intervals) os << " [" << iv.lo << ", " << iv.hi << ']';
  if (!r.eigenvalues.empty())
    os << " eig=[" << r.eigenvalues.front() << ", " << r.eigenvalues.back() << ']';
  if (r.clamped) os << " clamped";
  return os.str();
}

}  // namespace regsaddle
