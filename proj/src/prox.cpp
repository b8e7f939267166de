#include "scinc/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>

namespace scinc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

bool is_point(const Separable& s, Index i) { return s.lo(i) == s.hi(i); }

void check_separable(const Separable& s) {
  const Index p = s.weight.size();
  if (s.center.size() != p || s.lin.size() != p || s.lo.size() != p || s.hi.size() != p)
    throw UsageError("Separable: inconsistent component lengths");
  if ((s.weight.array() < 0.0).any()) throw UsageError("Separable: negative l1 weight");
  if ((s.lo.array() > s.hi.array()).any()) throw UsageError("Separable: lo > hi");
}

// Interval [a, b] = dh_i(u); a = -inf or b = +inf at active bounds.
void sep_interval(const Separable& s, Index i, double u, double& a, double& b) {
  if (is_point(s, i)) {
    a = -kInf;
    b = kInf;
    return;
  }
  const double w = s.weight(i), m = s.center(i), c = s.lin(i);
  const double ktol = 1e-12 * (1.0 + std::abs(m));
  if (w > 0.0 && std::abs(u - m) <= ktol) {
    a = c - w;
    b = c + w;
  } else {
    a = b = c + (u > m ? w : -w);
    if (w == 0.0) a = b = c;
  }
  const double btol = 1e-12;
  if (u <= s.lo(i) + btol * (1.0 + std::abs(s.lo(i)))) a = -kInf;
  if (u >= s.hi(i) - btol * (1.0 + std::abs(s.hi(i)))) b = kInf;
}

double sep_prox1(const Separable& s, Index i, double x, double q) {
  if (is_point(s, i)) return s.lo(i);
  const double xs = x - s.lin(i) / q;
  const double m = s.center(i);
  const double thr = s.weight(i) / q;
  const double d = xs - m;
  double u = m;
  if (d > thr) u = xs - thr;
  else if (d < -thr) u = xs + thr;
  return clampd(u, s.lo(i), s.hi(i));
}

}  // namespace

// ---------------------------------------------------------------------------
// scalar conjugates of h(u) = w|u - m| + c u on [lo, hi]

double separable_conj_value(const Separable& h, Index i, double y) {
  const double w = h.weight(i), m = h.center(i), c = h.lin(i), lo = h.lo(i), hi = h.hi(i);
  const double r = y - c;
  if (hi == kInf && r - w > 0.0) return kInf;
  if (lo == -kInf && r + w < 0.0) return kInf;
  auto obj = [&](double u) { return r * u - w * std::abs(u - m); };
  double best = obj(clampd(m, lo, hi));
  if (std::isfinite(lo)) best = std::max(best, obj(lo));
  if (std::isfinite(hi)) best = std::max(best, obj(hi));
  return best;
}

void separable_conj_argmax(const Separable& h, Index i, double y, double& a, double& b) {
  const double w = h.weight(i), m = h.center(i), c = h.lin(i), lo = h.lo(i), hi = h.hi(i);
  const double r = y - c;
  const double mp = clampd(m, lo, hi);
  const double s_left = r + w, s_right = r - w;
  if (mp < hi && s_right > 0.0) {
    a = b = hi;
  } else if (mp > lo && s_left < 0.0) {
    a = b = lo;
  } else {
    a = b = mp;
    if (mp < hi && s_right == 0.0) b = hi;
    if (mp > lo && s_left == 0.0) a = lo;
  }
  if (!std::isfinite(a) && !std::isfinite(b) && a == b)
    throw DomainError("conjugate argmax: y outside dom h*");
}

// ---------------------------------------------------------------------------
// ProxFn construction

ProxFn::ProxFn(Separable s) : kind_(Kind::Separable), dim_(s.dim()), sep_(std::move(s)) {
  check_separable(sep_);
}

ProxFn::ProxFn(AffineLinear a) : kind_(Kind::Affine), dim_(a.dim()), aff_(std::move(a)) {
  if (aff_.B.rows() > 0 && aff_.B.cols() != dim_) throw UsageError("AffineLinear: B has wrong column count");
  if (aff_.B.rows() == 0) aff_.B.resize(0, dim_);
  if (aff_.d.size() != aff_.B.rows()) throw UsageError("AffineLinear: d length must equal rows of B");
}

ProxFn::ProxFn(ConjPlusLinear c) : kind_(Kind::ConjLinear), dim_(c.dim()), conj_(std::move(c)) {
  check_separable(conj_.h);
  require_dim(conj_.h.dim(), dim_, "ConjPlusLinear");
}

ProxFn::ProxFn(std::vector<ProxFn> blocks) : kind_(Kind::Blocks), blocks_(std::move(blocks)) {
  for (const auto& b : blocks_) dim_ += b.dim();
}

ProxFn ProxFn::zero(Index p) { return linear(Vec::Zero(p)); }

ProxFn ProxFn::linear(Vec c) {
  const Index p = c.size();
  return ProxFn(AffineLinear{Mat(0, p), Vec(0), std::move(c)});
}

ProxFn ProxFn::l1(Index p, double rho) {
  return ProxFn(Separable{Vec::Constant(p, rho), Vec::Zero(p), Vec::Zero(p), Vec::Constant(p, -kInf),
                          Vec::Constant(p, kInf)});
}

ProxFn ProxFn::box(Vec lo, Vec hi) {
  const Index p = lo.size();
  return ProxFn(Separable{Vec::Zero(p), Vec::Zero(p), Vec::Zero(p), std::move(lo), std::move(hi)});
}

ProxFn ProxFn::point(Vec m) {
  const Index p = m.size();
  return ProxFn(Separable{Vec::Zero(p), Vec::Zero(p), Vec::Zero(p), m, m});
}

ProxFn ProxFn::affine(Mat B, Vec d, Vec c) { return ProxFn(AffineLinear{std::move(B), std::move(d), std::move(c)}); }

ProxFn ProxFn::conj_plus_linear(const ProxFn& g, Vec b) {
  require_dim(b.size(), g.dim(), "conj_plus_linear");
  if (g.kind() != Kind::Separable) throw CapabilityError("conj_plus_linear: g must be separable");
  const Separable& h = g.separable();
  const bool all_points = (h.lo.array() == h.hi.array()).all();
  if (all_points) {
    // (delta_m + <c,.>)*(y) = <y - c, m>; the constant -<c, m> is dropped.
    return linear(h.lo + b);
  }
  return ProxFn(ConjPlusLinear{h, std::move(b)});
}

// ---------------------------------------------------------------------------
// structure queries

bool ProxFn::is_affine() const {
  switch (kind_) {
    case Kind::Affine: return true;
    case Kind::Separable:
      for (Index i = 0; i < dim_; ++i) {
        if (is_point(sep_, i)) continue;
        if (sep_.weight(i) != 0.0 || std::isfinite(sep_.lo(i)) || std::isfinite(sep_.hi(i))) return false;
      }
      return true;
    case Kind::ConjLinear: return false;
    case Kind::Blocks:
      return std::all_of(blocks_.begin(), blocks_.end(), [](const ProxFn& b) { return b.is_affine(); });
  }
  return false;
}

bool ProxFn::is_separable() const {
  switch (kind_) {
    case Kind::Affine: return aff_.B.rows() == 0;
    case Kind::Separable:
    case Kind::ConjLinear: return true;
    case Kind::Blocks:
      return std::all_of(blocks_.begin(), blocks_.end(), [](const ProxFn& b) { return b.is_separable(); });
  }
  return false;
}

AffineLinear ProxFn::as_affine() const {
  if (!is_affine()) throw CapabilityError("as_affine: function is not affine");
  switch (kind_) {
    case Kind::Affine: return aff_;
    case Kind::Separable: {
      std::vector<Index> pts;
      for (Index i = 0; i < dim_; ++i)
        if (is_point(sep_, i)) pts.push_back(i);
      AffineLinear a{Mat::Zero(static_cast<Index>(pts.size()), dim_), Vec(static_cast<Index>(pts.size())), sep_.lin};
      for (size_t r = 0; r < pts.size(); ++r) {
        a.B(static_cast<Index>(r), pts[r]) = 1.0;
        a.d(static_cast<Index>(r)) = sep_.lo(pts[r]);
      }
      return a;
    }
    case Kind::Blocks: {
      std::vector<AffineLinear> parts;
      Index rows = 0;
      for (const auto& b : blocks_) {
        parts.push_back(b.as_affine());
        rows += parts.back().B.rows();
      }
      AffineLinear a{Mat::Zero(rows, dim_), Vec(rows), Vec(dim_)};
      Index r = 0, off = 0;
      for (const auto& pa : parts) {
        a.B.block(r, off, pa.B.rows(), pa.dim()) = pa.B;
        a.d.segment(r, pa.B.rows()) = pa.d;
        a.c.segment(off, pa.dim()) = pa.c;
        r += pa.B.rows();
        off += pa.dim();
      }
      return a;
    }
    case Kind::ConjLinear: break;
  }
  throw CapabilityError("as_affine: unsupported kind");
}

// ---------------------------------------------------------------------------
// evaluation

double ProxFn::value(const Vec& u) const {
  require_dim(u.size(), dim_, "ProxFn::value");
  switch (kind_) {
    case Kind::Separable: {
      double v = 0.0;
      for (Index i = 0; i < dim_; ++i) {
        const double tol = 1e-9 * (1.0 + std::abs(u(i)));
        if (u(i) < sep_.lo(i) - tol || u(i) > sep_.hi(i) + tol) return kInf;
        v += sep_.weight(i) * std::abs(u(i) - sep_.center(i)) + sep_.lin(i) * u(i);
      }
      return v;
    }
    case Kind::Affine: {
      if (aff_.B.rows() > 0) {
        const double r = (aff_.B * u - aff_.d).norm();
        if (r > 1e-9 * (1.0 + aff_.d.norm() + aff_.B.norm() * u.norm())) return kInf;
      }
      return aff_.c.dot(u);
    }
    case Kind::ConjLinear: {
      double v = conj_.b.dot(u);
      for (Index i = 0; i < dim_; ++i) v += separable_conj_value(conj_.h, i, u(i));
      return v;
    }
    case Kind::Blocks: {
      double v = 0.0;
      Index off = 0;
      for (const auto& b : blocks_) {
        v += b.value(u.segment(off, b.dim()));
        off += b.dim();
      }
      return v;
    }
  }
  return kInf;
}

bool ProxFn::in_domain(const Vec& u, double tol) const {
  (void)tol;
  return std::isfinite(value(u));
}

Vec ProxFn::prox_diag(const Vec& x, const Vec& q) const {
  require_dim(x.size(), dim_, "prox_diag");
  require_dim(q.size(), dim_, "prox_diag");
  if ((q.array() <= 0.0).any()) throw UsageError("prox_diag: weights must be positive");
  switch (kind_) {
    case Kind::Separable: {
      Vec u(dim_);
      for (Index i = 0; i < dim_; ++i) u(i) = sep_prox1(sep_, i, x(i), q(i));
      return u;
    }
    case Kind::Affine: return prox(x, Metric::diagonal(q));
    case Kind::ConjLinear: return prox_psi_from_g(ProxFn(conj_.h), conj_.b, q.cwiseInverse(), x);
    case Kind::Blocks: {
      Vec u(dim_);
      Index off = 0;
      for (const auto& b : blocks_) {
        u.segment(off, b.dim()) = b.prox_diag(x.segment(off, b.dim()), q.segment(off, b.dim()));
        off += b.dim();
      }
      return u;
    }
  }
  return x;
}

Vec ProxFn::prox(const Vec& x, const Metric& Q) const {
  require_dim(x.size(), dim_, "prox");
  require_dim(Q.dim(), dim_, "prox");
  if (is_affine()) {
    // min <c,u> + 0.5||u - x||_Q^2 s.t. Bu = d:
    //   u = x - Q^{-1}(c + B^T mu),  (B Q^{-1} B^T) mu = B(x - Q^{-1}c) - d
    const AffineLinear a = as_affine();
    Vec u = x - Q.solve(a.c);
    if (a.B.rows() == 0) return u;
    Mat qib(dim_, a.B.rows());
    for (Index r = 0; r < a.B.rows(); ++r) qib.col(r) = Q.solve(a.B.row(r).transpose());
    const Mat s = symmetrize(a.B * qib);
    Eigen::LLT<Mat> llt(s);
    if (llt.info() != Eigen::Success) throw NumericError("prox: constraint matrix is rank deficient");
    const Vec mu = llt.solve(a.B * u - a.d);
    u -= qib * mu;
    return u;
  }
  if (Q.is_diagonal()) return prox_diag(x, Q.diag());
  throw CapabilityError("prox: non-affine function under a dense metric has no closed form");
}

void ProxFn::subdiff_interval(const Vec& u, Vec& lo, Vec& hi) const {
  require_dim(u.size(), dim_, "subdiff_interval");
  lo.resize(dim_);
  hi.resize(dim_);
  switch (kind_) {
    case Kind::Separable:
      for (Index i = 0; i < dim_; ++i) sep_interval(sep_, i, u(i), lo(i), hi(i));
      return;
    case Kind::ConjLinear:
      for (Index i = 0; i < dim_; ++i) {
        separable_conj_argmax(conj_.h, i, u(i), lo(i), hi(i));
        lo(i) += conj_.b(i);
        hi(i) += conj_.b(i);
      }
      return;
    case Kind::Affine:
      if (aff_.B.rows() > 0) throw CapabilityError("subdiff_interval: affine constraints are not separable");
      lo = aff_.c;
      hi = aff_.c;
      return;
    case Kind::Blocks: {
      Index off = 0;
      for (const auto& b : blocks_) {
        Vec l, h;
        b.subdiff_interval(u.segment(off, b.dim()), l, h);
        lo.segment(off, b.dim()) = l;
        hi.segment(off, b.dim()) = h;
        off += b.dim();
      }
      return;
    }
  }
}

namespace {

// Walk the block tree and split coordinates into interval-type pieces and
// affine-constrained pieces. gamma receives the interval choice (or the
// affine linear term), rows/rhs collect padded constraint rows.
void collect(const ProxFn& f, Index off, Index total, const Vec& u, const Vec& s, Vec& gamma,
             std::vector<Vec>& rows, bool& has_interval) {
  using K = ProxFn::Kind;
  if (f.kind() == K::Blocks) {
    for (const auto& b : f.blocks()) {
      collect(b, off, total, u, s, gamma, rows, has_interval);
      off += b.dim();
    }
    return;
  }
  const Index n = f.dim();
  if (f.kind() == K::Affine && f.affine_part().B.rows() > 0) {
    const AffineLinear& a = f.affine_part();
    gamma.segment(off, n) = a.c;
    for (Index r = 0; r < a.B.rows(); ++r) {
      Vec row = Vec::Zero(total);
      row.segment(off, n) = a.B.row(r).transpose();
      rows.push_back(std::move(row));
    }
    return;
  }
  Vec lo, hi;
  f.subdiff_interval(u.segment(off, n), lo, hi);
  for (Index i = 0; i < n; ++i) {
    gamma(off + i) = clampd(-s(off + i), lo(i), hi(i));
    if (lo(i) != hi(i)) has_interval = true;
  }
}

}  // namespace

Vec ProxFn::closest_subgradient(const Vec& u, const Vec& s, const Metric& H, bool* exact) const {
  require_dim(u.size(), dim_, "closest_subgradient");
  require_dim(s.size(), dim_, "closest_subgradient");
  Vec gamma = Vec::Zero(dim_);
  std::vector<Vec> rows;
  bool has_interval = false;
  collect(*this, 0, dim_, u, s, gamma, rows, has_interval);
  if (!rows.empty()) {
    // Minimize ||s + gamma + B^T mu||*_H over mu:
    //   (B H^{-1} B^T) mu = -B H^{-1} (s + gamma)
    Mat B(static_cast<Index>(rows.size()), dim_);
    for (size_t r = 0; r < rows.size(); ++r) B.row(static_cast<Index>(r)) = rows[r].transpose();
    Mat hib(dim_, B.rows());
    for (Index r = 0; r < B.rows(); ++r) hib.col(r) = H.solve(B.row(r).transpose());
    const Vec base = s + gamma;
    Eigen::LLT<Mat> llt(symmetrize(B * hib));
    if (llt.info() != Eigen::Success) throw NumericError("closest_subgradient: constraint rows are dependent");
    const Vec mu = -llt.solve(hib.transpose() * base);
    gamma += B.transpose() * mu;
  }
  if (exact) *exact = H.is_diagonal() || !has_interval;
  return gamma;
}

Vec ProxFn::min_norm_subgradient(const Vec& u) const {
  require_dim(u.size(), dim_, "min_norm_subgradient");
  return closest_subgradient(u, Vec::Zero(dim_), Metric::diagonal(Vec::Ones(dim_)));
}

Vec ProxFn::project_conj_subdiff(const Vec& y, const Vec& v) const {
  require_dim(y.size(), dim_, "project_conj_subdiff");
  require_dim(v.size(), dim_, "project_conj_subdiff");
  if (kind_ == Kind::Blocks) {
    Vec out(dim_);
    Index off = 0;
    for (const auto& b : blocks_) {
      out.segment(off, b.dim()) = b.project_conj_subdiff(y.segment(off, b.dim()), v.segment(off, b.dim()));
      off += b.dim();
    }
    return out;
  }
  if (kind_ != Kind::Separable)
    throw CapabilityError("project_conj_subdiff: only separable g has an interval conjugate subdifferential");
  Vec out(dim_);
  for (Index i = 0; i < dim_; ++i) {
    double a, b;
    separable_conj_argmax(sep_, i, y(i), a, b);
    out(i) = clampd(v(i), a, b);
  }
  return out;
}

ProxFn ProxFn::translated(const Vec& c) const {
  require_dim(c.size(), dim_, "ProxFn::translated");
  switch (kind_) {
    case Kind::Separable: {
      Separable s = sep_;
      s.center -= c;
      s.lo -= c;
      s.hi -= c;
      return ProxFn(std::move(s));
    }
    case Kind::Affine: {
      AffineLinear a = aff_;
      if (a.B.rows() > 0) a.d -= a.B * c;
      return ProxFn(std::move(a));
    }
    case Kind::ConjLinear: {
      // h*(c + u) = (h - <c, .>)*(u)
      ConjPlusLinear p = conj_;
      p.h.lin -= c;
      return ProxFn(std::move(p));
    }
    case Kind::Blocks: {
      std::vector<ProxFn> parts;
      Index off = 0;
      for (const auto& b : blocks_) {
        parts.push_back(b.translated(c.segment(off, b.dim())));
        off += b.dim();
      }
      return ProxFn(std::move(parts));
    }
  }
  throw CapabilityError("translated: unsupported kind");
}

std::string ProxFn::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Separable: os << "separable(" << dim_ << ")"; break;
    case Kind::Affine: os << "affine(" << dim_ << ", rows=" << aff_.B.rows() << ")"; break;
    case Kind::ConjLinear: os << "conj_plus_linear(" << dim_ << ")"; break;
    case Kind::Blocks:
      os << "blocks[";
      for (size_t i = 0; i < blocks_.size(); ++i) os << (i ? "," : "") << blocks_[i].describe();
      os << "]";
      break;
  }
  return os.str();
}

Vec prox_psi_from_g(const ProxFn& g, const Vec& b, const Vec& q, const Vec& y) {
  require_dim(b.size(), g.dim(), "prox_psi_from_g");
  require_dim(q.size(), g.dim(), "prox_psi_from_g");
  require_dim(y.size(), g.dim(), "prox_psi_from_g");
  const Vec inner = g.prox_diag(y.cwiseQuotient(q) - b, q);
  return y - q.cwiseProduct(b) - q.cwiseProduct(inner);
}

}  // namespace scinc
