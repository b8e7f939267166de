#include "scinc/operators.hpp"

namespace scinc {

Vec MonotoneOp::single_valued(const Vec& z) const {
  require_dim(z.size(), dim(), "MonotoneOp");
  Vec out = Vec::Zero(dim());
  if (has_linear()) out += K * z;
  if (a.size()) out += a;
  return out;
}

Vec MonotoneOp::pick_element(const Vec& z) const {
  const Vec s = single_valued(z);
  // Minimal-norm choice of gamma in dG(z) given the single-valued part:
  // kinks of l1 terms resolve to the value closest to -s (0 when s = 0).
  return s + G.closest_subgradient(z, s, Metric::diagonal(Vec::Ones(dim())));
}

double MonotoneOp::member_residual(const Vec& z, const Vec& w, const Metric& H, bool* exact) const {
  if (!std::isfinite(G.value(z))) throw DomainError("member_residual: z outside dom G");
  const Vec s = single_valued(z) - w;
  return H.dual_norm(s + G.closest_subgradient(z, s, H, exact));
}

MonotoneOp MonotoneOp::shifted(const Vec& s) const {
  require_dim(s.size(), dim(), "MonotoneOp::shifted");
  MonotoneOp out = *this;
  out.a = a.size() ? Vec(a - s) : Vec(-s);
  return out;
}

SubSolution MonotoneOp::solve_linearized(const Metric& H, const Vec& q, double t, double delta,
                                         const Vec* warm, const Vec* center) const {
  Subproblem sp;
  sp.H = &H;
  sp.q = q;
  sp.t = t;
  sp.K = has_linear() ? &K : nullptr;
  sp.a = a;
  sp.G = &G;
  sp.delta_target = delta;
  if (warm) sp.warm_start = *warm;
  if (center) sp.center = *center;
  if (solver) return solve_centered(sp, solver);
  return inexact_subsolve(sp);
}

MonotoneOp subdiff_operator(ProxFn g) {
  MonotoneOp op;
  op.G = std::move(g);
  return op;
}

MonotoneOp constant_operator(Vec c) {
  MonotoneOp op;
  op.G = ProxFn::zero(c.size());
  op.a = std::move(c);
  return op;
}

MonotoneOp saddle_operator(ProxFn g, ProxFn psi, const Mat& L) {
  const Index n = g.dim(), m = psi.dim();
  if (L.rows() != m || L.cols() != n)
    throw UsageError("saddle_operator: L must be " + std::to_string(m) + "x" + std::to_string(n));
  MonotoneOp op;
  op.G = ProxFn(std::vector<ProxFn>{std::move(g), std::move(psi)});
  op.K = Mat::Zero(n + m, n + m);
  op.K.topRightCorner(n, m) = -L.transpose();
  op.K.bottomLeftCorner(m, n) = L;
  return op;
}

SubSolution resolvent(const MonotoneOp& A, const Metric& Q, const Vec& z, double t, double delta) {
  // 0 in tQ(w - z) + A(w): the linearized inclusion centered at z with q = 0.
  return A.solve_linearized(Q, Vec::Zero(z.size()), t, delta, nullptr, &z);
}

ResidualValue eps_solution_residual(const MonotoneOp& A, const Barrier& F, const Vec& z) {
  if (!F.in_domain(z)) throw DomainError("eps_solution_residual: z not interior");
  ResidualValue r;
  r.value = A.member_residual(z, Vec::Zero(z.size()), F.metric(z), &r.exact);
  return r;
}

}  // namespace scinc
