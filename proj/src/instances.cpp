#include "scinc/instances.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/QR>
#include <spdlog/spdlog.h>

namespace scinc {

namespace {

Mat solve_cols(const Metric& H, const Mat& B) {
  Mat out(B.rows(), B.cols());
  for (Index j = 0; j < B.cols(); ++j) out.col(j) = H.solve(B.col(j));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// problem validation

MonotoneOp SaddleProblem::op() const {
  MonotoneOp A = saddle_operator(g, psi, L);
  A.solver = solver;
  return A;
}

void SaddleProblem::validate() const {
  if (!f || !phi) throw UsageError("SaddleProblem: missing barrier");
  require_dim(f->dim(), n(), "SaddleProblem: f vs g");
  require_dim(phi->dim(), m(), "SaddleProblem: phi vs psi");
  if (L.rows() != m() || L.cols() != n()) throw UsageError("SaddleProblem: L must be m x n");
  require_finite(Eigen::Map<const Vec>(L.data(), L.size()), "SaddleProblem: L");
  if (x0.size() > 0 && !f->in_domain(x0)) throw DomainError("SaddleProblem: x0 not interior");
  if (y0.size() > 0 && !phi->in_domain(y0)) throw DomainError("SaddleProblem: y0 not interior");
}

void PrimalProblem::validate() const {
  if (!f) throw UsageError("PrimalProblem: missing barrier");
  require_dim(f->dim(), g.dim(), "PrimalProblem: f vs g");
  if (x0.size() > 0) {
    if (!f->in_domain(x0)) throw DomainError("PrimalProblem: x0 not interior");
    if (!g.in_domain(x0)) spdlog::warn("PrimalProblem: x0 lies outside dom g");
  }
}

void DualConicProblem::validate() const {
  if (!f) throw UsageError("DualConicProblem: missing barrier");
  if (!f->log_homogeneous() || !f->has_conjugate())
    throw CapabilityError("DualConicProblem: f must be log-homogeneous with a closed-form conjugate");
  require_dim(c_obj.size(), f->dim(), "DualConicProblem: c_obj");
  require_dim(b.size(), g.dim(), "DualConicProblem: b vs g");
  if (L.rows() != b.size() || L.cols() != c_obj.size()) throw UsageError("DualConicProblem: L must be p x n");
  if (!g.is_separable()) throw CapabilityError("DualConicProblem: g must be separable");
  Eigen::ColPivHouseholderQR<Mat> qr(L.transpose());
  if (qr.rank() < L.rows())
    throw DomainError("DualConicProblem: L is not full row rank (rank " + std::to_string(qr.rank()) + " < " +
                      std::to_string(L.rows()) + ")");
  if (cone_center.size() > 0 && !f->in_domain(cone_center))
    throw DomainError("DualConicProblem: cone_center not interior");
}

// ---------------------------------------------------------------------------
// schedules

Schedule saddle_schedule(const SaddleProblem& P, double c, double beta, std::optional<double> eta,
                         std::optional<double> t0) {
  const BarrierPtr F = P.barrier();
  return make_schedule(F->nu(), F->kappa(), c, beta, eta, t0);
}

Schedule primal_schedule(const PrimalProblem& P, double c, double beta, std::optional<double> eta,
                         std::optional<double> t0) {
  return make_schedule(P.f->nu(), P.f->kappa(), c, beta, eta, t0);
}

Schedule dual_schedule(const DualConicProblem& P, double c, double beta, std::optional<double> eta,
                       std::optional<double> t0) {
  const BarrierPtr phi = dual_barrier(P);
  Schedule s = make_schedule(phi->nu(), phi->kappa(), c, beta, eta, t0);
  // Dual runs stop on sqrt(nu) t <= eps.
  s.M0 = std::sqrt(phi->nu());
  return s;
}

// ---------------------------------------------------------------------------
// saddle

SaddleResult solve_saddle(const SaddleProblem& P, const Schedule& sched, const SolveOptions& opt) {
  P.validate();
  const BarrierPtr F = P.barrier();
  const MonotoneOp A = P.op();
  Vec z0(P.n() + P.m());
  if (P.x0.size() == 0) throw UsageError("solve_saddle: x0 is required");
  z0.head(P.n()) = P.x0;
  z0.tail(P.m()) = P.y0.size() > 0 ? P.y0 : Vec::Zero(P.m());
  SaddleResult out;
  out.run = algorithm1(*F, A, z0, sched, opt);
  out.x = out.run.z.head(P.n());
  out.y = out.run.z.tail(P.m());
  return out;
}

Subsolver saddle_affine_subsolver(Index nx) {
  return [nx](const Subproblem& sp) -> SubSolution {
    if (sp.center.size()) return solve_centered(sp, saddle_affine_subsolver(nx));
    const Index N = sp.dim();
    const Index ny = N - nx;
    if (nx <= 0 || ny <= 0) throw UsageError("saddle_affine_subsolver: bad block split");
    if (!sp.G->is_affine()) throw CapabilityError("saddle_affine_subsolver: G must be affine");
    const AffineLinear aff = sp.G->as_affine();
    if (aff.B.rows() > 0 && aff.B.rightCols(ny).cwiseAbs().maxCoeff() > 0.0)
      throw CapabilityError("saddle_affine_subsolver: constraints on y are not supported");
    const Mat& Hf = sp.H->hessian();
    if (Hf.block(0, nx, nx, ny).cwiseAbs().maxCoeff() > 0.0)
      throw CapabilityError("saddle_affine_subsolver: metric is not block diagonal");

    const double t = sp.t;
    Vec a = Vec::Zero(N);
    if (sp.a.size() > 0) a = sp.a;
    a += aff.c;
    Mat L = Mat::Zero(ny, nx);
    if (sp.K && sp.K->size() > 0) {
      L = sp.K->block(nx, 0, ny, nx);
      const Mat skew = sp.K->block(0, nx, nx, ny) + L.transpose();
      if (skew.cwiseAbs().maxCoeff() > 1e-12 * (1.0 + L.cwiseAbs().maxCoeff()) ||
          sp.K->topLeftCorner(nx, nx).cwiseAbs().maxCoeff() > 0.0 ||
          sp.K->bottomRightCorner(ny, ny).cwiseAbs().maxCoeff() > 0.0)
        throw CapabilityError("saddle_affine_subsolver: K is not the saddle coupling");
    }
    const Mat Hxm = Hf.topLeftCorner(nx, nx);
    const Mat Hym = Hf.bottomRightCorner(ny, ny);
    // Block factors of the full factor keep the accuracy of a factored metric.
    const Mat Lf = sp.H->factor();
    const Metric Hx = Metric::from_factor(Lf.topLeftCorner(nx, nx));
    const Metric Hy = Metric::from_factor(Lf.bottomRightCorner(ny, ny));
    const Mat Bx = aff.B.rows() > 0 ? Mat(aff.B.leftCols(nx)) : Mat(0, nx);

    // Linear system in (x, y, mu):
    //   t Hx x - L^T y + B^T mu = fx,   t Hy y + L x = fy,   B x = fd.
    // Eliminating y gives M x + B^T mu / t = (fx + L^T Hy^{-1} fy / t) / t
    // with M = Hx + L^T Hy^{-1} L / t^2; M^{-1} is applied through the
    // Woodbury identity with the small matrix S = t^2 Hy + L Hx^{-1} L^T.
    const Mat HxLt = solve_cols(Hx, L.transpose());
    const Eigen::LDLT<Mat> Sd(Mat(t * t * Hym + L * HxLt));
    if (Sd.info() != Eigen::Success) throw NumericError("saddle_affine_subsolver: reduced system factorization failed");
    auto Minv = [&](const Vec& v) -> Vec {
      const Vec u = Hx.solve(v);
      return u - HxLt * Sd.solve(Vec(L * u));
    };
    Mat MB(nx, Bx.rows());
    for (Index r = 0; r < Bx.rows(); ++r) MB.col(r) = Minv(Bx.row(r).transpose());
    const Eigen::LDLT<Mat> Sb(Mat(Bx * MB));
    auto solve_sys = [&](const Vec& fx, const Vec& fy, const Vec& fd, Vec& x, Vec& y, Vec& mu) {
      const Vec g = (fx + L.transpose() * Hy.solve(fy) / t) / t;
      const Vec Mg = Minv(g);
      x = Mg;
      mu = Vec::Zero(Bx.rows());
      if (Bx.rows() > 0) {
        const Vec nu = Sb.solve(Vec(Bx * Mg - fd));
        if (!nu.allFinite()) throw NumericError("saddle_affine_subsolver: singular multiplier system");
        x -= MB * nu;
        mu = t * nu;
      }
      y = Hy.solve(Vec(fy - L * x)) / t;
    };

    const Vec fx = -(t * sp.q.head(nx) + a.head(nx));
    const Vec fy = -(t * sp.q.tail(ny) + a.tail(ny));
    const Vec fd = aff.B.rows() > 0 ? Vec(aff.d) : Vec(0);
    Vec x, y, mu;
    solve_sys(fx, fy, fd, x, y, mu);
    // Iterative refinement on the full system until the certificate is met.
    for (int round = 0; round < 8; ++round) {
      Vec w(N);
      w << x, y;
      if (round >= 2 && certify(sp, w).delta_achieved <= sp.delta_target) break;
      const Vec rx = fx - (t * (Hxm * x) - L.transpose() * y + Bx.transpose() * mu);
      const Vec ry = fy - (t * (Hym * y) + L * x);
      const Vec rd = fd - Bx * x;
      Vec dx, dy, dmu;
      solve_sys(rx, ry, rd, dx, dy, dmu);
      x += dx;
      y += dy;
      mu += dmu;
    }

    SubSolution sol;
    sol.w.resize(N);
    sol.w << x, y;
    sol.cert = certify(sp, sol.w);
    sol.cert.method = "saddle-closed-form";
    if (sol.cert.delta_achieved <= sp.delta_target) return sol;
    // Near the boundary the elimination loses too much accuracy for
    // refinement to recover; the dense KKT solve still works there.
    SubSolution kkt = inexact_subsolve(sp);
    if (kkt.cert.delta_achieved >= sol.cert.delta_achieved) return sol;
    spdlog::debug("saddle_affine_subsolver: closed form reached {}, falling back to KKT ({})", sol.cert.delta_achieved,
                  kkt.cert.delta_achieved);
    kkt.cert.method = "saddle-kkt-fallback";
    return kkt;
  };
}

std::pair<Mat, Vec> saddle_closed_form_step(const Mat& Xk, const Vec& yk, double t, const Mat& C,
                                            const std::vector<Mat>& Ls) {
  const Index n = Xk.rows();
  const Index p = yk.size();
  if (static_cast<Index>(Ls.size()) != p) throw UsageError("saddle_closed_form_step: need one L_i per y entry");
  Mat L(p, n * n);
  for (Index i = 0; i < p; ++i) L.row(i) = sym_vec(Ls[static_cast<size_t>(i)]).transpose();
  const ProxFn g = ProxFn::affine(sym_vec(Mat::Identity(n, n)).transpose(), Vec::Ones(1), -sym_vec(C));
  const MonotoneOp A = saddle_operator(g, ProxFn::zero(p), L);
  const BarrierPtr F = barrier_sum(barrier_logdet(n), barrier_box(p));
  Vec z(n * n + p);
  z << sym_vec(Xk), yk;
  const Metric H = F->metric(z);
  Subproblem sp;
  sp.H = &H;
  sp.q = F->grad(z);
  sp.center = z;
  sp.t = t;
  sp.K = &A.K;
  sp.G = &A.G;
  const SubSolution sol = saddle_affine_subsolver(n * n)(sp);
  return {sym_mat(sol.w.head(n * n)), sol.w.tail(p)};
}

// ---------------------------------------------------------------------------
// primal

PrimalResult solve_primal(const PrimalProblem& P, const Schedule& sched, const SolveOptions& opt) {
  P.validate();
  const MonotoneOp A = subdiff_operator(P.g);
  if (P.x0.size() == 0) throw UsageError("solve_primal: x0 is required");
  const Vec& x0 = P.x0;
  PrimalResult out;
  out.run = algorithm1(*P.f, A, x0, sched, opt);
  out.x = out.run.z;
  out.objective = P.g.value(out.x);
  return out;
}

// ---------------------------------------------------------------------------
// dual conic

BarrierPtr dual_barrier(const DualConicProblem& P) { return dual_feasible_barrier(P.f, P.L, P.c_obj); }

MonotoneOp dual_operator(const DualConicProblem& P) {
  return subdiff_operator(ProxFn::conj_plus_linear(P.g, P.b));
}

RecoveredPrimal recover_primal(const Vec& y, double t, const DualConicProblem& P) {
  if (!(t > 0.0)) throw UsageError("recover_primal: t must be positive");
  require_dim(y.size(), P.L.rows(), "recover_primal: y");
  const Vec w = P.c_obj - P.L.transpose() * y;
  if (!P.f->conj_in_domain(w)) throw DomainError("recover_primal: c - L^T y is outside the conjugate domain");
  RecoveredPrimal r;
  r.x = P.f->conj_grad(w / t);
  if (!P.f->in_domain(r.x)) throw NumericError("recover_primal: recovered x is not interior", 0.0);
  const Vec Lx_b = P.L * r.x - P.b;
  r.s = P.g.project_conj_subdiff(y, Lx_b);

  r.stationarity = P.f->metric(r.x).dual_norm(Vec(-w));
  const BarrierPtr phi = dual_barrier(P);
  r.feasibility = phi->metric(y).dual_norm(Vec(Lx_b - r.s));

  Vec lo, hi;
  P.g.subdiff_interval(r.s, lo, hi);
  double worst = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double d = y(i) < lo(i) ? lo(i) - y(i) : (y(i) > hi(i) ? y(i) - hi(i) : 0.0);
    worst = std::max(worst, d);
  }
  r.subgradient = worst;
  r.central = (w - t * P.f->grad(r.x)).norm();
  return r;
}

Vec find_dual_start(const DualConicProblem& P) {
  const BarrierPtr phi = dual_barrier(P);
  const Index p = P.L.rows();
  if (phi->in_domain(Vec::Zero(p))) return Vec::Zero(p);
  if (P.cone_center.size() == 0) throw UsageError("find_dual_start: cone_center is required");
  const Vec& eK = P.cone_center;
  const Vec dir = P.L * eK;
  for (double sign : {1.0, -1.0}) {
    const Vec v = sign * dir;
    double hi = 1.0;
    int doublings = 0;
    while (!phi->in_domain(Vec(hi * v)) && doublings < 80) {
      hi *= 2.0;
      ++doublings;
    }
    if (doublings == 80) continue;
    double lo = 0.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (phi->in_domain(Vec(mid * v)) ? hi : lo) = mid;
    }
    const Vec y = 2.0 * hi * v;
    if (phi->in_domain(y)) return y;
  }
  throw DomainError("find_dual_start: no strictly dual-feasible point along the cone-center direction");
}

constexpr double kPolishTol = 1e-10;

DualResult solve_dual_conic(const DualConicProblem& P, const Schedule& sched, const SolveOptions& opt,
                            const Vec* y_start) {
  P.validate();
  const BarrierPtr phi = dual_barrier(P);
  const MonotoneOp A = dual_operator(P);
  const Vec y0 = y_start ? *y_start : find_dual_start(P);
  if (!phi->in_domain(y0)) throw DomainError("solve_dual_conic: start is not strictly dual feasible");

  SolveOptions o = opt;
  auto user_hook = opt.row_hook;
  o.row_hook = [&P, user_hook](const Vec& y, double t, TraceRow& row) {
    if (row.phase == "1" || row.phase == "damped") {
      if (user_hook) user_hook(y, t, row);
      return;
    }
    const RecoveredPrimal r = recover_primal(y, t, P);
    row.residual_primary = r.stationarity;
    row.residual_aux = r.feasibility;
    if (user_hook) user_hook(y, t, row);
  };

  DualResult out;
  out.run = algorithm1(*phi, A, y0, sched, o);
  // The path iterates keep lambda near beta; a few full steps at the final t
  // move y onto the central path so the recovered x is close to feasible.
  if (out.run.lambda > kPolishTol) {
    FixedTRun pol = fixed_t_newton(*phi, A, out.run.z, out.run.t, false, kPolishTol, 50, 1e-12, o.row_hook);
    for (TraceRow& row : pol.rows) out.run.trace.rows.push_back(row);
    out.run.z = std::move(pol.z);
    out.run.lambda = pol.lambda;
  }
  out.y = out.run.z;
  out.primal = recover_primal(out.y, out.run.t, P);
  const ProxFn psi = ProxFn::conj_plus_linear(P.g, P.b);
  out.dual_objective = psi.value(out.y);
  out.primal_objective = P.c_obj.dot(out.primal.x) - P.g.value(out.primal.s);
  return out;
}

}  // namespace scinc
