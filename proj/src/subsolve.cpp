// Certified solvers for the composite-quadratic subproblem
//   0 in t (H w + q) + K w + a + dG(w).
//
// Every path returns a certificate e that is a genuine member of the
// right-hand side at the returned w, so delta_achieved = ||e||*_H / t is an
// honest bound that callers may rely on.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "scinc/prox.hpp"

namespace scinc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool has_k(const Subproblem& sp) { return sp.K != nullptr && sp.K->size() > 0; }

double model_value(const Subproblem& sp, const Vec& w) {
  double v = 0.5 * sp.t * w.dot(sp.H->apply(w)) + sp.t * sp.q.dot(w);
  if (sp.a.size()) v += sp.a.dot(w);
  return v + sp.G->value(w);
}

SubSolution finish(const Subproblem& sp, Vec w, int iters, const char* method, bool exact_path) {
  SubSolution out;
  out.cert = certify(sp, w);
  out.cert.inner_iterations = iters;
  out.cert.method = method;
  out.cert.exact = exact_path;
  out.w = std::move(w);
  return out;
}

// G affine: linear KKT system, solved directly.
SubSolution solve_affine(const Subproblem& sp) {
  const AffineLinear A = sp.G->as_affine();
  const Index p = sp.dim(), m = A.B.rows();
  Vec r = sp.t * sp.q + A.c;
  if (sp.a.size()) r += sp.a;
  Vec w;
  if (!has_k(sp)) {
    // w = -(tH)^{-1}(r + B^T mu),  B (tH)^{-1} B^T mu = -B (tH)^{-1} r - d
    w = -sp.H->solve(r) / sp.t;
    if (m > 0) {
      Mat hib(p, m);
      for (Index j = 0; j < m; ++j) hib.col(j) = sp.H->solve(A.B.row(j).transpose()) / sp.t;
      Eigen::LLT<Mat> llt(symmetrize(A.B * hib));
      if (llt.info() != Eigen::Success) throw NumericError("subsolve: affine constraint rows are dependent");
      const Vec mu = llt.solve(A.B * w - A.d);
      w -= hib * mu;
    }
  } else {
    Mat kkt = Mat::Zero(p + m, p + m);
    kkt.topLeftCorner(p, p) = sp.t * sp.H->hessian() + *sp.K;
    if (m > 0) {
      kkt.topRightCorner(p, m) = A.B.transpose();
      kkt.bottomLeftCorner(m, p) = A.B;
    }
    Vec rhs(p + m);
    rhs << -r, A.d;
    Eigen::PartialPivLU<Mat> lu(kkt);
    Vec sol = lu.solve(rhs);
    sol += lu.solve(rhs - kkt * sol);
    if (!sol.allFinite()) throw NumericError("subsolve: KKT system is singular");
    w = sol.head(p);
  }
  return finish(sp, std::move(w), 1, "kkt", true);
}

// Flatten G into one Separable description when every block is either
// separable or a plain linear term.
bool flatten_separable(const ProxFn& f, Separable& out, Index off) {
  using K = ProxFn::Kind;
  switch (f.kind()) {
    case K::Separable: {
      const Separable& s = f.separable();
      const Index n = s.dim();
      out.weight.segment(off, n) = s.weight;
      out.center.segment(off, n) = s.center;
      out.lin.segment(off, n) = s.lin;
      out.lo.segment(off, n) = s.lo;
      out.hi.segment(off, n) = s.hi;
      return true;
    }
    case K::Affine: {
      if (f.affine_part().B.rows() > 0) return false;
      const Index n = f.dim();
      out.weight.segment(off, n).setZero();
      out.center.segment(off, n).setZero();
      out.lin.segment(off, n) = f.affine_part().c;
      out.lo.segment(off, n).setConstant(-kInf);
      out.hi.segment(off, n).setConstant(kInf);
      return true;
    }
    case K::ConjLinear: return false;
    case K::Blocks:
      for (const auto& b : f.blocks()) {
        if (!flatten_separable(b, out, off)) return false;
        off += b.dim();
      }
      return true;
  }
  return false;
}

// Active-set refinement for separable piecewise-linear G under a dense
// quadratic. Each coordinate is either pinned at a breakpoint (bound or
// kink) or free on an open linear piece. A reduced Cholesky solve gives the
// minimizer over the current face; a ratio test pins coordinates that would
// leave their piece, and pinned coordinates whose multiplier leaves its
// interval are released one at a time. Termination is checked only through
// the certificate, so a wrong guess costs time but never correctness.
// With a monotone K the reduced system is solved by LU instead.
class ActiveSet {
 public:
  ActiveSet(const Subproblem& sp, const Separable& s) : sp_(sp), s_(s), p_(sp.dim()) {
    P_ = sp.t * sp.H->hessian();
    if (has_k(sp)) P_ += *sp.K;
    r_ = sp.t * sp.q;
    if (sp.a.size()) r_ += sp.a;
  }

  // Returns the best point found; *best_delta receives its certificate.
  Vec run(Vec u, double target, int max_rounds, double* best_delta, int* rounds_used) {
    pinned_.assign(p_, false);
    pl_ = Vec::Constant(p_, -kInf);
    pr_ = Vec::Constant(p_, kInf);
    slope_ = Vec::Zero(p_);
    for (Index i = 0; i < p_; ++i) {
      u(i) = std::min(std::max(u(i), s_.lo(i)), s_.hi(i));
      classify(i, u(i));
      if (pinned_[i]) u(i) = pin_value_[i];
    }
    Vec best = u;
    double best_d = kInf;
    int round = 0;
    for (; round < max_rounds; ++round) {
      std::vector<Index> F, B;
      for (Index i = 0; i < p_; ++i) (pinned_[i] ? B : F).push_back(i);
      if (!F.empty()) {
        const Index nf = static_cast<Index>(F.size());
        Mat pff(nf, nf);
        Vec rhs(nf);
        for (Index a = 0; a < nf; ++a) {
          double acc = -(r_(F[a]) + slope_(F[a]));
          for (Index j : B) acc -= P_(F[a], j) * u(j);
          rhs(a) = acc;
          for (Index b = 0; b < nf; ++b) pff(a, b) = P_(F[a], F[b]);
        }
        Vec x;
        if (has_k(sp_)) {
          // tH + K is positive definite on its symmetric part, so any
          // principal block is nonsingular.
          x = pff.partialPivLu().solve(rhs);
          if (!x.allFinite()) break;
        } else {
          Eigen::LLT<Mat> llt(pff);
          if (llt.info() != Eigen::Success) break;
          x = llt.solve(rhs);
        }
        double alpha = 1.0;
        Index block = -1;
        double block_bp = 0.0;
        for (Index a = 0; a < nf; ++a) {
          const Index i = F[a];
          const double d = x(a) - u(i);
          if (x(a) > pr_(i) && d > 0.0) {
            const double al = (pr_(i) - u(i)) / d;
            if (al < alpha) alpha = al, block = i, block_bp = pr_(i);
          } else if (x(a) < pl_(i) && d < 0.0) {
            const double al = (pl_(i) - u(i)) / d;
            if (al < alpha) alpha = al, block = i, block_bp = pl_(i);
          }
        }
        alpha = std::max(alpha, 0.0);
        for (Index a = 0; a < nf; ++a) u(F[a]) += alpha * (x(a) - u(F[a]));
        if (block >= 0) {
          u(block) = block_bp;
          classify(block, u(block));
          continue;
        }
      }
      const InexactCertificate c = certify(sp_, u);
      if (c.delta_achieved < best_d) best_d = c.delta_achieved, best = u;
      if (best_d <= target) break;
      const Vec g = P_ * u + r_;
      double worst = 0.0;
      Index wi = -1;
      bool right = false;
      for (Index i = 0; i < p_; ++i) {
        if (!pinned_[i] || s_.lo(i) == s_.hi(i)) continue;
        const double gam = -g(i);
        const double sl = left_slope(i), sr = right_slope(i);
        if (gam > sr && gam - sr > worst) worst = gam - sr, wi = i, right = true;
        if (gam < sl && sl - gam > worst) worst = sl - gam, wi = i, right = false;
      }
      if (wi < 0) break;
      release(wi, right);
    }
    *best_delta = best_d;
    *rounds_used = round;
    return best;
  }

 private:
  bool has_kink(Index i) const {
    return s_.weight(i) > 0.0 && s_.center(i) > s_.lo(i) && s_.center(i) < s_.hi(i);
  }
  std::vector<double> bps(Index i) const {
    std::vector<double> b;
    if (std::isfinite(s_.lo(i))) b.push_back(s_.lo(i));
    if (has_kink(i)) b.push_back(s_.center(i));
    if (std::isfinite(s_.hi(i)) && s_.hi(i) != s_.lo(i)) b.push_back(s_.hi(i));
    return b;
  }
  double piece_slope(Index i, double mid) const {
    const double w = s_.weight(i);
    return s_.lin(i) + (mid > s_.center(i) ? w : -w);
  }
  double left_slope(Index i) const {
    const double v = pin_value_[i];
    if (v <= s_.lo(i)) return -kInf;
    return s_.lin(i) + (v <= s_.center(i) ? -s_.weight(i) : s_.weight(i));
  }
  double right_slope(Index i) const {
    const double v = pin_value_[i];
    if (v >= s_.hi(i)) return kInf;
    return s_.lin(i) + (v >= s_.center(i) ? s_.weight(i) : -s_.weight(i));
  }

  void classify(Index i, double u) {
    if (pin_value_.size() != static_cast<size_t>(p_)) pin_value_.assign(p_, 0.0);
    const auto b = bps(i);
    if (s_.lo(i) == s_.hi(i)) {
      pinned_[i] = true;
      pin_value_[i] = s_.lo(i);
      return;
    }
    for (double v : b) {
      if (std::abs(u - v) <= 1e-9 * (1.0 + std::abs(v))) {
        pinned_[i] = true;
        pin_value_[i] = v;
        return;
      }
    }
    pinned_[i] = false;
    pl_(i) = -kInf;
    pr_(i) = kInf;
    for (double v : b) {
      if (v < u) pl_(i) = std::max(pl_(i), v);
      if (v > u) pr_(i) = std::min(pr_(i), v);
    }
    slope_(i) = piece_slope(i, u);
  }

  void release(Index i, bool right) {
    const double v = pin_value_[i];
    pinned_[i] = false;
    pl_(i) = -kInf;
    pr_(i) = kInf;
    for (double b : bps(i)) {
      if (right) {
        if (b > v) pr_(i) = std::min(pr_(i), b);
      } else if (b < v) {
        pl_(i) = std::max(pl_(i), b);
      }
    }
    if (right) pl_(i) = v;
    else pr_(i) = v;
    const double mid = right ? v + 1.0 : v - 1.0;  // any point inside the chosen piece
    slope_(i) = piece_slope(i, mid);
  }

  const Subproblem& sp_;
  const Separable& s_;
  Index p_;
  Mat P_;
  Vec r_;
  std::vector<bool> pinned_;
  std::vector<double> pin_value_;
  Vec pl_, pr_, slope_;
};

// K = 0, dense H: accelerated proximal gradient with adaptive restart,
// interleaved with active-set refinement when G is separable.
SubSolution solve_apg(const Subproblem& sp, const SubsolveOptions& opt) {
  const Index p = sp.dim();
  const int cap = opt.max_iters > 0 ? opt.max_iters : static_cast<int>(10 * p + 500);
  const double target = sp.delta_target;

  Separable flat{Vec(p), Vec(p), Vec(p), Vec(p), Vec(p)};
  const bool separable = opt.allow_polish && flatten_separable(*sp.G, flat, 0);

  const Mat Hm = sp.H->hessian();
  double lip = 1.02 * sp.t * power_max_eig(Hm);
  Vec r = sp.t * sp.q;
  if (sp.a.size()) r += sp.a;

  Vec w;
  if (sp.warm_start && sp.warm_start->size() == p) w = *sp.warm_start;
  else w = -sp.H->solve(r) / sp.t;
  w = sp.G->prox_diag(w, Vec::Constant(p, lip));

  Vec best = w;
  InexactCertificate c0 = certify(sp, w);
  double best_d = c0.delta_achieved;
  Vec best_e = std::move(c0.e);
  if (best_d <= target) return finish(sp, best, 0, "apg", false);

  Vec y = w;
  double theta = 1.0;
  int next_polish = 30;
  int it = 0;
  for (; it < cap; ++it) {
    const Vec gy = sp.t * (Hm * y) + r;
    Vec wn;
    for (int bt = 0; bt < 40; ++bt) {
      wn = sp.G->prox_diag(y - gy / lip, Vec::Constant(p, lip));
      const Vec d = wn - y;
      if (0.5 * sp.t * d.dot(Hm * d) <= 0.5 * lip * d.squaredNorm() * (1.0 + 1e-12)) break;
      lip *= 2.0;
    }
    // Prox optimality: lip (y - wn) - gy in dG(wn), so
    //   e = B(wn) - B(y) + lip (y - wn)  lies in B(wn) + dG(wn).
    const Vec e = sp.t * (Hm * wn) + r - gy + lip * (y - wn);
    double dn = sp.H->dual_norm(e) / sp.t;
    Vec en = e;
    if (dn > target && (it % 5 == 0)) {
      InexactCertificate c = certify(sp, wn);
      if (c.delta_achieved < dn) dn = c.delta_achieved, en = std::move(c.e);
    }
    if (dn < best_d) best_d = dn, best = wn, best_e = std::move(en);
    if (best_d <= target) {
      ++it;
      break;
    }
    if ((y - wn).dot(wn - w) > 0.0) {
      theta = 1.0;
      y = wn;
    } else {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
      y = wn + ((theta - 1.0) / tn) * (wn - w);
      theta = tn;
    }
    w = wn;
    if (separable && it + 1 == next_polish) {
      next_polish += 200;
      ActiveSet as(sp, flat);
      double d_as = kInf;
      int rounds = 0;
      const Vec u = as.run(best, target, static_cast<int>(4 * p + 20), &d_as, &rounds);
      if (d_as < best_d) {
        best_d = d_as;
        best = u;
        best_e = certify(sp, u).e;
      }
      if (best_d <= target) {
        ++it;
        break;
      }
      if (model_value(sp, u) < model_value(sp, w)) {
        w = u;
        y = u;
        theta = 1.0;
      }
    }
  }
  SubSolution out = finish(sp, best, it, separable ? "apg+active_set" : "apg", false);
  // The prox-step residual is a valid member too and can beat the closest-subgradient one.
  if (best_d < out.cert.delta_achieved) {
    out.cert.e = std::move(best_e);
    out.cert.delta_achieved = best_d;
  }
  if (out.cert.delta_achieved > target)
    throw ConvergenceError("inexact_subsolve: iteration cap reached without certificate", out.cert.delta_achieved);
  return out;
}

// K != 0 and G not affine: Tseng forward-backward-forward iterations.
SubSolution solve_fbf(const Subproblem& sp, const SubsolveOptions& opt) {
  const Index p = sp.dim();
  const int cap = opt.max_iters > 0 ? opt.max_iters : static_cast<int>(10 * p + 500) * 20;
  const double target = sp.delta_target;
  const Mat M = sp.t * sp.H->hessian() + *sp.K;
  const double lb = 1.05 * std::sqrt(power_max_eig(M.transpose() * M, 50));
  const double gam = 0.95 / lb;
  const Vec qgam = Vec::Constant(p, 1.0 / gam);

  Vec w = (sp.warm_start && sp.warm_start->size() == p) ? *sp.warm_start : Vec(Vec::Zero(p));
  w = sp.G->prox_diag(w, qgam);
  Separable flat{Vec(p), Vec(p), Vec(p), Vec(p), Vec(p)};
  const bool separable = opt.allow_polish && flatten_separable(*sp.G, flat, 0);
  int next_polish = 30;

  Vec best = w;
  double best_d = certify(sp, w).delta_achieved;
  int it = 0;
  for (; it < cap && best_d > target; ++it) {
    if (separable && it == next_polish) {
      next_polish += 200;
      ActiveSet as(sp, flat);
      double d_as = kInf;
      int rounds = 0;
      const Vec u = as.run(best, target, static_cast<int>(4 * p + 20), &d_as, &rounds);
      if (d_as < best_d) best_d = d_as, best = u;
      if (best_d <= target) break;
    }
    const Vec bw = sp.smooth(w);
    const Vec wb = sp.G->prox_diag(w - gam * bw, qgam);
    const Vec bb = sp.smooth(wb);
    // (w - gam B(w) - wb)/gam in dG(wb)  =>  e = (w - wb)/gam - B(w) + B(wb).
    const Vec e = (w - wb) / gam - bw + bb;
    double dn = sp.H->dual_norm(e) / sp.t;
    if (dn > target && it % 10 == 0) dn = std::min(dn, certify(sp, wb).delta_achieved);
    if (dn < best_d) best_d = dn, best = wb;
    w = wb - gam * (bb - bw);
  }
  SubSolution out = finish(sp, best, it, separable ? "fbf+active_set" : "fbf", false);
  if (out.cert.delta_achieved > target)
    throw ConvergenceError("inexact_subsolve: FBF iteration cap reached without certificate", out.cert.delta_achieved);
  return out;
}

}  // namespace

Vec Subproblem::smooth(const Vec& w) const {
  Vec out = center.size() ? Vec(t * (H->apply(w - center) + q)) : Vec(t * (H->apply(w) + q));
  if (K != nullptr && K->size() > 0) out += *K * w;
  if (a.size()) out += a;
  return out;
}

InexactCertificate certify(const Subproblem& sp, const Vec& w) {
  InexactCertificate c;
  if (!std::isfinite(sp.G->value(w))) {
    c.e = Vec::Constant(sp.dim(), kInf);
    c.delta_achieved = kInf;
    return c;
  }
  const Vec s = sp.smooth(w);
  c.e = s + sp.G->closest_subgradient(w, s, *sp.H);
  c.delta_achieved = sp.H->dual_norm(c.e) / sp.t;
  return c;
}

SubSolution inexact_subsolve(const Subproblem& sp, const SubsolveOptions& opt) {
  if (sp.H == nullptr || sp.G == nullptr) throw UsageError("inexact_subsolve: missing metric or function");
  if (!(sp.t > 0.0) || !std::isfinite(sp.t)) throw UsageError("inexact_subsolve: t must be positive");
  if (sp.delta_target < 0.0) throw UsageError("inexact_subsolve: negative delta target");
  require_dim(sp.H->dim(), sp.dim(), "inexact_subsolve: metric");
  require_dim(sp.G->dim(), sp.dim(), "inexact_subsolve: function");
  if (sp.a.size()) require_dim(sp.a.size(), sp.dim(), "inexact_subsolve: shift");
  require_finite(sp.q, "inexact_subsolve: q");
  if (sp.center.size()) return solve_centered(sp, [&opt](const Subproblem& s) { return inexact_subsolve(s, opt); });

  if (sp.G->is_affine()) return solve_affine(sp);
  if (!has_k(sp) && sp.H->is_diagonal()) {
    // 0 in dG(w) + tH(w - u) with u = -H^{-1}(q + a/t): one scaled prox.
    Vec rhs = sp.q;
    if (sp.a.size()) rhs += sp.a / sp.t;
    const Vec u = -sp.H->solve(rhs);
    return finish(sp, sp.G->prox_diag(u, sp.t * sp.H->diag()), 1, "prox", true);
  }
  if (!has_k(sp)) return solve_apg(sp, opt);
  return solve_fbf(sp, opt);
}

SubSolution solve_centered(const Subproblem& sp, const Subsolver& solve) {
  if (sp.center.size() == 0) return solve(sp);
  require_dim(sp.center.size(), sp.dim(), "solve_centered: center");
  const Vec& c = sp.center;
  const ProxFn Gc = sp.G->translated(c);
  Subproblem inner = sp;
  inner.center = Vec();
  inner.G = &Gc;
  inner.a = sp.a.size() ? Vec(sp.a) : Vec::Zero(sp.dim());
  if (has_k(sp)) inner.a += *sp.K * c;
  if (sp.warm_start) inner.warm_start = Vec(*sp.warm_start - c);
  SubSolution sol = solve(inner);
  sol.w += c;
  return sol;
}

SubSolution inexact_subsolve(const Metric& H, const Vec& q, const ProxFn& g, double t, double delta_target) {
  Subproblem sp;
  sp.H = &H;
  sp.q = q;
  sp.t = t;
  sp.G = &g;
  sp.delta_target = delta_target;
  return inexact_subsolve(sp);
}

}  // namespace scinc
