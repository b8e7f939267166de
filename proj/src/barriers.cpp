#include "scinc/barriers.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace scinc {

double Barrier::kappa() const {
  const double v = nu();
  return log_homogeneous() ? 1.0 : v + 2.0 * std::sqrt(v);
}

Metric Barrier::metric(const Vec& z) const { return Metric(hessian(z)); }

Vec Barrier::hess_apply(const Vec& z, const Vec& u) const { return hessian(z) * u; }

bool Barrier::conj_in_domain(const Vec&) const {
  throw CapabilityError(name() + ": no closed-form conjugate");
}
double Barrier::conj_value(const Vec&) const {
  throw CapabilityError(name() + ": no closed-form conjugate");
}
Vec Barrier::conj_grad(const Vec&) const {
  throw CapabilityError(name() + ": no closed-form conjugate");
}
Mat Barrier::conj_hessian(const Vec&) const {
  throw CapabilityError(name() + ": no closed-form conjugate");
}
Mat Barrier::conj_hessian_factor(const Vec& w) const {
  Eigen::LLT<Mat> llt(symmetrize(conj_hessian(w)));
  if (llt.info() != Eigen::Success) throw NumericError(name() + ": conjugate Hessian is not positive definite");
  return llt.matrixL();
}

void Barrier::check_domain(const Vec& z, const char* op) const {
  require_dim(z.size(), dim(), op);
  if (!in_domain(z)) throw DomainError(name() + "::" + op + ": point outside the barrier domain");
}

void Barrier::check_conj_domain(const Vec& w, const char* op) const {
  require_dim(w.size(), dim(), op);
  if (!conj_in_domain(w))
    throw DomainError(name() + "::" + op + ": point outside the conjugate domain");
}

namespace {

class Orthant final : public Barrier {
 public:
  explicit Orthant(Index p) : p_(p) {}
  std::string name() const override { return "orthant"; }
  Index dim() const override { return p_; }
  double nu() const override { return static_cast<double>(p_); }
  bool log_homogeneous() const override { return true; }
  bool in_domain(const Vec& z) const override {
    return z.size() == p_ && z.allFinite() && (z.array() > 0.0).all();
  }
  double value(const Vec& z) const override {
    check_domain(z, "value");
    return -z.array().log().sum();
  }
  Vec grad(const Vec& z) const override {
    check_domain(z, "grad");
    return -z.cwiseInverse();
  }
  Mat hessian(const Vec& z) const override {
    check_domain(z, "hessian");
    return z.array().square().inverse().matrix().asDiagonal();
  }
  Metric metric(const Vec& z) const override {
    check_domain(z, "metric");
    return Metric::diagonal(z.array().square().inverse().matrix());
  }

  bool has_conjugate() const override { return true; }
  bool conj_in_domain(const Vec& s) const override {
    return s.size() == p_ && s.allFinite() && (s.array() < 0.0).all();
  }
  double conj_value(const Vec& s) const override {
    check_conj_domain(s, "conj_value");
    return -(-s.array()).log().sum() - static_cast<double>(p_);
  }
  Vec conj_grad(const Vec& s) const override {
    check_conj_domain(s, "conj_grad");
    return -s.cwiseInverse();
  }
  Mat conj_hessian(const Vec& s) const override {
    check_conj_domain(s, "conj_hessian");
    return s.array().square().inverse().matrix().asDiagonal();
  }
  Mat conj_hessian_factor(const Vec& s) const override {
    check_conj_domain(s, "conj_hessian_factor");
    return s.cwiseAbs().cwiseInverse().asDiagonal();
  }

 private:
  Index p_;
};

class Box final : public Barrier {
 public:
  explicit Box(Index p) : p_(p) {}
  std::string name() const override { return "box"; }
  Index dim() const override { return p_; }
  double nu() const override { return 2.0 * static_cast<double>(p_); }
  bool log_homogeneous() const override { return false; }
  bool in_domain(const Vec& y) const override {
    return y.size() == p_ && y.allFinite() && (y.array().abs() < 1.0).all();
  }
  double value(const Vec& y) const override {
    check_domain(y, "value");
    return -(1.0 - y.array().square()).log().sum();
  }
  Vec grad(const Vec& y) const override {
    check_domain(y, "grad");
    return (2.0 * y.array() / (1.0 - y.array().square())).matrix();
  }
  Mat hessian(const Vec& y) const override { return diag(y).asDiagonal(); }
  Metric metric(const Vec& y) const override { return Metric::diagonal(diag(y)); }

 private:
  // d^2/dy^2 of -log(1-y^2) = 2(1+y^2)/(1-y^2)^2
  Vec diag(const Vec& y) const {
    check_domain(y, "hessian");
    const auto s = 1.0 - y.array().square();
    return (2.0 * (1.0 + y.array().square()) / s.square()).matrix();
  }
  Index p_;
};

// Cholesky of the symmetrized matrix; failure means "not positive definite".
bool chol_pd(const Mat& m, Eigen::LLT<Mat>* out) {
  if (!m.allFinite()) return false;
  Eigen::LLT<Mat> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) return false;
  if ((llt.matrixLLT().diagonal().array() <= 0.0).any()) return false;
  if (out) *out = std::move(llt);
  return true;
}

Mat kron_sym(const Mat& a) {
  const Index n = a.rows(), m = a.cols();
  Mat k(n * n, m * m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i) k.block(i * n, j * m, n, m) = a(i, j) * a;
  return k;
}

// Q with Q Q^T = M^{-1} for symmetric positive definite M, by eigendecomposition.
Mat inv_sqrt_factor(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw NumericError("logdet: matrix is not positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
}

class LogDet final : public Barrier {
 public:
  explicit LogDet(Index n) : n_(n) {}
  std::string name() const override { return "logdet"; }
  Index dim() const override { return n_ * n_; }
  double nu() const override { return static_cast<double>(n_); }
  bool log_homogeneous() const override { return true; }
  bool in_domain(const Vec& z) const override {
    return z.size() == dim() && chol_pd(sym_mat(z), nullptr);
  }
  double value(const Vec& z) const override { return -logdet(factor(z, "value")); }
  Vec grad(const Vec& z) const override {
    const auto llt = factor(z, "grad");
    return -sym_vec(llt.solve(Mat::Identity(n_, n_)));
  }
  // vec(Z^{-1} U Z^{-1}) = (Z^{-1} kron Z^{-1}) vec(U)
  Mat hessian(const Vec& z) const override {
    const auto llt = factor(z, "hessian");
    return kron_sym(symmetrize(llt.solve(Mat::Identity(n_, n_))));
  }
  // kron(Q, Q) kron(Q, Q)^T = kron(Z^{-1}, Z^{-1}) with Q Q^T = Z^{-1}.
  Metric metric(const Vec& z) const override {
    factor(z, "metric");
    return Metric::from_factor(kron_sym(inv_sqrt_factor(sym_mat(z))));
  }

  bool has_conjugate() const override { return true; }
  bool conj_in_domain(const Vec& w) const override {
    return w.size() == dim() && chol_pd(-sym_mat(w), nullptr);
  }
  // f*(W) = -n - log det(-W)
  double conj_value(const Vec& w) const override {
    return -static_cast<double>(n_) - logdet(conj_factor(w, "conj_value"));
  }
  Vec conj_grad(const Vec& w) const override {
    const auto llt = conj_factor(w, "conj_grad");
    return sym_vec(llt.solve(Mat::Identity(n_, n_)));  // -W^{-1} = (-W)^{-1}
  }
  Mat conj_hessian(const Vec& w) const override {
    const auto llt = conj_factor(w, "conj_hessian");
    return kron_sym(symmetrize(llt.solve(Mat::Identity(n_, n_))));
  }
  Mat conj_hessian_factor(const Vec& w) const override {
    conj_factor(w, "conj_hessian_factor");
    return kron_sym(inv_sqrt_factor(-sym_mat(w)));
  }

 private:
  static double logdet(const Eigen::LLT<Mat>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  Eigen::LLT<Mat> factor(const Vec& z, const char* op) const {
    require_dim(z.size(), dim(), op);
    Eigen::LLT<Mat> llt;
    if (!chol_pd(sym_mat(z), &llt)) throw DomainError(std::string("logdet::") + op + ": matrix is not positive definite");
    return llt;
  }
  Eigen::LLT<Mat> conj_factor(const Vec& w, const char* op) const {
    require_dim(w.size(), dim(), op);
    Eigen::LLT<Mat> llt;
    if (!chol_pd(-sym_mat(w), &llt))
      throw DomainError(std::string("logdet::") + op + ": -W is not positive definite");
    return llt;
  }
  Index n_;
};

class Lorentz final : public Barrier {
 public:
  explicit Lorentz(Index p) : p_(p) {}
  std::string name() const override { return "lorentz"; }
  Index dim() const override { return p_ + 1; }
  double nu() const override { return 2.0; }
  bool log_homogeneous() const override { return true; }
  bool in_domain(const Vec& v) const override {
    return v.size() == dim() && v.allFinite() && v(p_) > 0.0 && gap(v) > 0.0;
  }
  double value(const Vec& v) const override {
    check_domain(v, "value");
    return -std::log(gap(v));
  }
  Vec grad(const Vec& v) const override {
    check_domain(v, "grad");
    return (2.0 / gap(v)) * reflect(v);
  }
  // Hessian of -log(v^T J v) with J = diag(-I, 1):
  //   -2J/d + 4 (Jv)(Jv)^T / d^2
  Mat hessian(const Vec& v) const override {
    check_domain(v, "hessian");
    const double d = gap(v);
    const Vec jv = -reflect(v);
    Mat h = (4.0 / (d * d)) * jv * jv.transpose();
    h.diagonal().head(p_).array() += 2.0 / d;
    h(p_, p_) -= 2.0 / d;
    return h;
  }

  bool has_conjugate() const override { return true; }
  bool conj_in_domain(const Vec& w) const override {
    return w.size() == dim() && w.allFinite() && w(p_) < 0.0 && gap(w) > 0.0;
  }
  // f*(v, s) = -log(s^2 - |v|^2) + 2 log 2 - 2 on s < -|v|
  double conj_value(const Vec& w) const override {
    check_conj_domain(w, "conj_value");
    return -std::log(gap(w)) + 2.0 * std::log(2.0) - 2.0;
  }
  Vec conj_grad(const Vec& w) const override {
    check_conj_domain(w, "conj_grad");
    return (2.0 / gap(w)) * reflect(w);
  }
  Mat conj_hessian(const Vec& w) const override {
    check_conj_domain(w, "conj_hessian");
    const double d = gap(w);
    const Vec jw = -reflect(w);
    Mat h = (4.0 / (d * d)) * jw * jw.transpose();
    h.diagonal().head(p_).array() += 2.0 / d;
    h(p_, p_) -= 2.0 / d;
    return h;
  }

 private:
  double gap(const Vec& v) const { return v(p_) * v(p_) - v.head(p_).squaredNorm(); }
  // (z, -t): the gradient of -log gap is 2 (z, -t) / gap.
  Vec reflect(const Vec& v) const {
    Vec r = v;
    r(p_) = -v(p_);
    return r;
  }
  Index p_;
};

class Sum final : public Barrier {
 public:
  Sum(BarrierPtr f, BarrierPtr g) : f_(std::move(f)), g_(std::move(g)) {}
  std::string name() const override { return f_->name() + "+" + g_->name(); }
  std::vector<BarrierPtr> parts() const override { return {f_, g_}; }
  Index dim() const override { return f_->dim() + g_->dim(); }
  double nu() const override { return f_->nu() + g_->nu(); }
  bool log_homogeneous() const override { return f_->log_homogeneous() && g_->log_homogeneous(); }
  bool in_domain(const Vec& z) const override {
    return z.size() == dim() && f_->in_domain(head(z)) && g_->in_domain(tail(z));
  }
  double value(const Vec& z) const override {
    require_dim(z.size(), dim(), "value");
    return f_->value(head(z)) + g_->value(tail(z));
  }
  Vec grad(const Vec& z) const override {
    require_dim(z.size(), dim(), "grad");
    Vec out(dim());
    out << f_->grad(head(z)), g_->grad(tail(z));
    return out;
  }
  Mat hessian(const Vec& z) const override {
    require_dim(z.size(), dim(), "hessian");
    Mat h = Mat::Zero(dim(), dim());
    h.topLeftCorner(f_->dim(), f_->dim()) = f_->hessian(head(z));
    h.bottomRightCorner(g_->dim(), g_->dim()) = g_->hessian(tail(z));
    return h;
  }
  Metric metric(const Vec& z) const override {
    require_dim(z.size(), dim(), "metric");
    const Metric a = f_->metric(head(z));
    const Metric b = g_->metric(tail(z));
    if (a.is_diagonal() && b.is_diagonal()) {
      Vec d(dim());
      d << a.diag(), b.diag();
      return Metric::diagonal(std::move(d));
    }
    Mat l = Mat::Zero(dim(), dim());
    l.topLeftCorner(f_->dim(), f_->dim()) = a.factor();
    l.bottomRightCorner(g_->dim(), g_->dim()) = b.factor();
    return Metric::from_factor(l);
  }

  bool has_conjugate() const override { return f_->has_conjugate() && g_->has_conjugate(); }
  bool conj_in_domain(const Vec& w) const override {
    return w.size() == dim() && f_->conj_in_domain(head(w)) && g_->conj_in_domain(tail(w));
  }
  double conj_value(const Vec& w) const override {
    require_dim(w.size(), dim(), "conj_value");
    return f_->conj_value(head(w)) + g_->conj_value(tail(w));
  }
  Vec conj_grad(const Vec& w) const override {
    require_dim(w.size(), dim(), "conj_grad");
    Vec out(dim());
    out << f_->conj_grad(head(w)), g_->conj_grad(tail(w));
    return out;
  }
  Mat conj_hessian(const Vec& w) const override {
    require_dim(w.size(), dim(), "conj_hessian");
    Mat h = Mat::Zero(dim(), dim());
    h.topLeftCorner(f_->dim(), f_->dim()) = f_->conj_hessian(head(w));
    h.bottomRightCorner(g_->dim(), g_->dim()) = g_->conj_hessian(tail(w));
    return h;
  }
  Mat conj_hessian_factor(const Vec& w) const override {
    require_dim(w.size(), dim(), "conj_hessian_factor");
    const Mat a = f_->conj_hessian_factor(head(w));
    const Mat b = g_->conj_hessian_factor(tail(w));
    Mat j = Mat::Zero(dim(), a.cols() + b.cols());
    j.topLeftCorner(a.rows(), a.cols()) = a;
    j.bottomRightCorner(b.rows(), b.cols()) = b;
    return j;
  }

 private:
  Vec head(const Vec& z) const { return z.head(f_->dim()); }
  Vec tail(const Vec& z) const { return z.tail(g_->dim()); }
  BarrierPtr f_, g_;
};

class Conjugate final : public Barrier {
 public:
  explicit Conjugate(BarrierPtr f) : f_(std::move(f)) {}
  std::string name() const override { return "conj(" + f_->name() + ")"; }
  Index dim() const override { return f_->dim(); }
  double nu() const override { return f_->nu(); }
  bool log_homogeneous() const override { return true; }
  bool in_domain(const Vec& w) const override { return f_->conj_in_domain(w); }
  double value(const Vec& w) const override { return f_->conj_value(w); }
  Vec grad(const Vec& w) const override { return f_->conj_grad(w); }
  Mat hessian(const Vec& w) const override { return f_->conj_hessian(w); }

 private:
  BarrierPtr f_;
};

class DualFeasible final : public Barrier {
 public:
  DualFeasible(BarrierPtr f, Mat l, Vec c) : f_(std::move(f)), l_(std::move(l)), c_(std::move(c)) {}
  std::string name() const override { return "dual(" + f_->name() + ")"; }
  Index dim() const override { return l_.rows(); }
  double nu() const override { return f_->nu(); }
  // Shifted by c_obj, so homogeneity is lost in general.
  bool log_homogeneous() const override { return false; }
  bool in_domain(const Vec& y) const override {
    return y.size() == dim() && y.allFinite() && f_->conj_in_domain(arg(y));
  }
  double value(const Vec& y) const override {
    check_domain(y, "value");
    return f_->conj_value(arg(y));
  }
  Vec grad(const Vec& y) const override {
    check_domain(y, "grad");
    return -(l_ * f_->conj_grad(arg(y)));
  }
  Mat hessian(const Vec& y) const override {
    check_domain(y, "hessian");
    const Mat h = l_ * f_->conj_hessian(arg(y)) * l_.transpose();
    return symmetrize(h);
  }
  Metric metric(const Vec& y) const override {
    check_domain(y, "metric");
    return Metric::from_factor(l_ * f_->conj_hessian_factor(arg(y)));
  }

 private:
  Vec arg(const Vec& y) const { return c_ - l_.transpose() * y; }
  BarrierPtr f_;
  Mat l_;
  Vec c_;
};

}  // namespace

BarrierPtr barrier_orthant(Index p) {
  if (p < 1) throw UsageError("barrier_orthant: p must be >= 1");
  return std::make_shared<Orthant>(p);
}

BarrierPtr barrier_logdet(Index n) {
  if (n < 1) throw UsageError("barrier_logdet: n must be >= 1");
  return std::make_shared<LogDet>(n);
}

BarrierPtr barrier_box(Index p) {
  if (p < 1) throw UsageError("barrier_box: p must be >= 1");
  return std::make_shared<Box>(p);
}

BarrierPtr barrier_lorentz(Index p) {
  if (p < 1) throw UsageError("barrier_lorentz: p must be >= 1");
  return std::make_shared<Lorentz>(p);
}

BarrierPtr barrier_sum(BarrierPtr f, BarrierPtr g) {
  if (!f || !g) throw UsageError("barrier_sum: null barrier");
  return std::make_shared<Sum>(std::move(f), std::move(g));
}

BarrierPtr conjugate_of(BarrierPtr f) {
  if (!f) throw UsageError("conjugate_of: null barrier");
  if (!f->log_homogeneous() || !f->has_conjugate())
    throw CapabilityError("conjugate_of: " + f->name() + " has no closed-form conjugate");
  return std::make_shared<Conjugate>(std::move(f));
}

BarrierPtr dual_feasible_barrier(BarrierPtr f, Mat L, Vec c_obj) {
  if (!f) throw UsageError("dual_feasible_barrier: null barrier");
  if (!f->log_homogeneous() || !f->has_conjugate())
    throw CapabilityError("dual_feasible_barrier: " + f->name() + " has no closed-form conjugate");
  require_dim(L.cols(), f->dim(), "dual_feasible_barrier: L columns");
  require_dim(c_obj.size(), f->dim(), "dual_feasible_barrier: c_obj");
  return std::make_shared<DualFeasible>(std::move(f), std::move(L), std::move(c_obj));
}

double analytical_center_residual(const Barrier& f, const Vec& z) {
  if (!f.in_domain(z)) throw DomainError("analytical_center_residual: point outside domain");
  return f.metric(z).dual_norm(f.grad(z));
}

Vec analytical_center(const Barrier& f, Vec z, double tol, int max_iters) {
  if (!f.in_domain(z)) throw DomainError("analytical_center: start outside domain");
  for (int it = 0; it < max_iters; ++it) {
    const Metric m = f.metric(z);
    const Vec g = f.grad(z);
    const Vec dz = m.solve(g);
    const double lam = std::sqrt(std::max(0.0, g.dot(dz)));
    if (lam <= tol) return z;
    // Damped step 1/(1+lambda) stays inside the Dikin ellipsoid.
    z -= dz / (1.0 + lam);
  }
  throw ConvergenceError("analytical_center: iteration cap reached", analytical_center_residual(f, z));
}

}  // namespace scinc
