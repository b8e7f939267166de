#include "scinc/linalg.hpp"

#include <cmath>

#include <Eigen/QR>
#include <limits>
#include <string>

namespace scinc {

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw NumericError(std::string(what) + ": non-finite entries");
}

void require_dim(Index got, Index want, const char* what) {
  if (got != want)
    throw UsageError(std::string(what) + ": dimension " + std::to_string(got) + ", expected " +
                     std::to_string(want));
}

namespace {

double factor_cond(const Mat& l) {
  const Vec ld = l.diagonal().cwiseAbs();
  const double lo = ld.minCoeff();
  return lo > 0.0 ? std::pow(ld.maxCoeff() / lo, 2) : std::numeric_limits<double>::infinity();
}

}  // namespace

Metric::Metric(Mat hessian) : n_(hessian.rows()) {
  if (hessian.rows() != hessian.cols()) throw UsageError("Metric: Hessian must be square");
  if (!hessian.allFinite()) throw NumericError("Metric: non-finite Hessian");
  h_ = 0.5 * (hessian + hessian.transpose());
  Eigen::LLT<Mat> llt(h_);
  if (llt.info() != Eigen::Success) throw NumericError("Metric: Hessian is not positive definite");
  l_ = llt.matrixL();
  const double scale = std::max(h_.norm(), 1e-300);
  const double resid = (l_ * l_.transpose() - h_).norm() / scale;
  cond_ = factor_cond(l_);
  if (resid > tol::factor_residual)
    throw NumericError("Metric: Cholesky factor residual " + std::to_string(resid), cond_);
}

Metric Metric::from_factor(const Mat& J) {
  if (J.rows() > J.cols()) throw UsageError("Metric::from_factor: factor needs at least as many columns as rows");
  if (!J.allFinite()) throw NumericError("Metric: non-finite Hessian factor");
  Metric m;
  m.n_ = J.rows();
  Eigen::HouseholderQR<Mat> qr(J.transpose());
  const Mat R = qr.matrixQR().topRows(m.n_).triangularView<Eigen::Upper>();
  m.l_ = R.transpose();
  if ((m.l_.diagonal().array() == 0.0).any()) throw NumericError("Metric: Hessian factor is rank deficient");
  m.h_ = J * J.transpose();
  m.cond_ = factor_cond(m.l_);
  return m;
}

Metric Metric::diagonal(Vec d) {
  if (!d.allFinite() || (d.array() <= 0.0).any())
    throw NumericError("Metric: diagonal Hessian must be positive");
  Metric m;
  m.n_ = d.size();
  m.diagonal_ = true;
  m.cond_ = d.size() ? d.maxCoeff() / d.minCoeff() : 1.0;
  m.d_ = std::move(d);
  return m;
}

Mat Metric::hessian() const {
  if (diagonal_) return d_.asDiagonal();
  return h_;
}

Mat Metric::factor() const {
  if (diagonal_) return d_.cwiseSqrt().asDiagonal();
  return l_;
}

Vec Metric::apply(const Vec& u) const {
  require_dim(u.size(), n_, "Metric::apply");
  if (diagonal_) return d_.cwiseProduct(u);
  return h_ * u;
}

Vec Metric::solve(const Vec& v) const {
  require_dim(v.size(), n_, "Metric::solve");
  if (diagonal_) return v.cwiseQuotient(d_);
  auto tri = [this](const Vec& r) -> Vec {
    return l_.transpose().triangularView<Eigen::Upper>().solve(l_.triangularView<Eigen::Lower>().solve(r));
  };
  Vec w = tri(v);
  // One step of iterative refinement keeps the residual at the level that
  // backward stability promises even for badly scaled Hessians.
  w += tri(v - h_ * w);
  const double denom = h_.norm() * w.norm() + v.norm();
  if (denom > 0.0) {
    const double resid = (h_ * w - v).norm() / denom;
    if (!std::isfinite(resid) || resid > tol::solve_residual)
      throw NumericError("Metric::solve: residual " + std::to_string(resid), cond_);
  }
  return w;
}

double Metric::norm(const Vec& u) const {
  return std::sqrt(std::max(0.0, u.dot(apply(u))));
}

double Metric::dual_norm(const Vec& v) const {
  require_dim(v.size(), n_, "Metric::dual_norm");
  if (diagonal_) return std::sqrt(v.cwiseAbs2().cwiseQuotient(d_).sum());
  // ||L^{-1} v||_2 via a single triangular solve.
  const Vec y = l_.triangularView<Eigen::Lower>().solve(v);
  return y.norm();
}

Metric Metric::block(Index start, Index len) const {
  if (diagonal_) return Metric::diagonal(d_.segment(start, len));
  return Metric(h_.block(start, start, len, len));
}

Vec sym_vec(const Mat& m) {
  if (m.rows() != m.cols()) throw UsageError("sym_vec: matrix must be square");
  const Mat s = symmetrize(m);
  return Eigen::Map<const Vec>(s.data(), s.size());
}

Index sym_order(Index p) {
  const auto n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(p))));
  if (n * n != p) throw UsageError("sym_mat: length " + std::to_string(p) + " is not a perfect square");
  return n;
}

Mat sym_mat(const Vec& v) {
  const Index n = sym_order(v.size());
  return symmetrize(Eigen::Map<const Mat>(v.data(), n, n));
}

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

double power_max_eig(const Mat& a, int iters) {
  const Index n = a.rows();
  if (n == 0) return 0.0;
  // Deterministic start with all components excited.
  Vec x = Vec::LinSpaced(n, 1.0, 2.0).normalized();
  double lam = 0.0;
  for (int i = 0; i < iters; ++i) {
    Vec y = a * x;
    const double ny = y.norm();
    if (ny == 0.0) return 0.0;
    lam = x.dot(y);
    x = y / ny;
  }
  return std::max(lam, (a * x).norm());
}

}  // namespace scinc
