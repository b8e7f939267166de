#include "scinc/newton.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

namespace scinc {

// ---------------------------------------------------------------------------
// schedule constants

double beta_upper(double c) { return 0.5 * (1.0 + 2.0 * c * c - std::sqrt(1.0 + 4.0 * c * c)); }

namespace {

void check_c_beta(double c, double beta) {
  if (!(c > 0.0 && c <= 1.0)) throw UsageError("schedule: c must lie in (0, 1]");
  if (!(beta > 0.0 && beta < beta_upper(c)))
    throw UsageError("schedule: beta must lie in (0, " + std::to_string(beta_upper(c)) + ") for c = " +
                     std::to_string(c));
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double sigma_bar(double c, double beta, double nu) {
  check_c_beta(c, beta);
  const double r = c * std::sqrt(beta);
  return (r - beta * (1.0 + r)) / ((1.0 + r) * std::sqrt(nu) + r);
}

double sigma_adaptive(double c, double beta, double grad_dual_norm) {
  check_c_beta(c, beta);
  const double r = c * std::sqrt(beta);
  return (r - beta * (1.0 + r)) / ((1.0 + r) * grad_dual_norm + r);
}

double delta_t_bar(double c, double beta) {
  check_c_beta(c, beta);
  const double r = c * std::sqrt(beta);
  const double a = 1.0 + r;
  return (1.0 - c * c) * beta / (a * a * a * (3.0 * r + c * c * beta + a * a * a));
}

double intermediate_bound(double c, double beta) {
  const double r = c * std::sqrt(beta);
  return r / (1.0 + r);
}

double m0_constant(double c, double beta, double nu) {
  const double m = intermediate_bound(c, beta);
  const double d = delta_t_bar(c, beta);
  return (std::sqrt(nu) + m + 2.0 * d) / (1.0 - m - d);
}

double theta_dual(double c, double beta) {
  check_c_beta(c, beta);
  const double r = c * std::sqrt(beta);
  const double a = 1.0 + r;
  const double K = 3.0 * r + c * c * beta + a * a * a;
  const double num0 = (1.0 - c * c) * beta;
  const double D = a * a * K - num0;
  const double second = (num0 + r * a * a * K) / D;
  return num0 / D + second * second;
}

double fgn_delta_bar(double b) {
  return b * (1.0 - 3.0 * b + b * b) * std::pow(1.0 - b, 4) / (2.0 * b * b * b - 5.0 * b * b + 3.0 * b + 1.0);
}

double fgn_rate(double b) { return (2.0 - 4.0 * b + b * b) / std::pow(1.0 - 2.0 * b, 3); }

double dgn_rate(double b) {
  const double q = 2.0 * b * b + 4.0 * b + 3.0;
  return q / (1.0 - b * b * q);
}

double key_estimate_rhs(double lambda, double delta) {
  const double s = 1.0 - lambda - delta;
  if (s <= 0.0) return std::numeric_limits<double>::infinity();
  const double r = (lambda + delta) / s;
  return r * r + delta / (s * s * s);
}

double path_residual_bound(double nu, double lambda, double delta, double t) {
  const double s = 1.0 - lambda - delta;
  if (s <= 0.0) return std::numeric_limits<double>::infinity();
  return (std::sqrt(nu) + lambda + 2.0 * delta) * t / s;
}

Schedule make_schedule(double nu, double kappa, double c, double beta, std::optional<double> eta,
                       std::optional<double> t0) {
  check_c_beta(c, beta);
  if (!(nu > 0.0)) throw UsageError("schedule: nu must be positive");
  Schedule s;
  s.c = c;
  s.beta = beta;
  s.eta = eta.value_or(0.5 * beta);
  if (!(s.eta > 0.0 && s.eta < beta)) throw UsageError("schedule: eta must lie in (0, beta)");
  s.nu = nu;
  s.kappa = kappa;
  s.t0 = t0.value_or(kappa);
  if (!(s.t0 > 0.0)) throw UsageError("schedule: t0 must be positive");
  s.sigma_bar = sigma_bar(c, beta, nu);
  if (!(s.sigma_bar > 0.0 && s.sigma_bar < 1.0))
    throw UsageError("schedule: (c, beta) gives a non-positive path step");
  s.delta_t_bar = delta_t_bar(c, beta);
  s.delta_tau_bar = delta_t_bar(c, s.eta);
  const double re = c * std::sqrt(s.eta);
  s.phase1_step = s.t0 * (re / (1.0 + re) - s.eta);
  if (!(s.phase1_step > 0.0)) throw UsageError("schedule: eta gives a non-positive phase-one step");
  s.M0 = m0_constant(c, beta, nu);
  s.theta = theta_dual(c, beta);
  return s;
}

std::int64_t k_max_bound(const Schedule& s, double eps) {
  const double r = s.c * std::sqrt(s.beta);
  const double ratio = ((1.0 + r) * std::sqrt(s.nu) + r) / (r - s.beta * (1.0 + r));
  const double v = std::floor(ratio * std::log(s.M0 * s.t0 / eps)) + 1.0;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(v));
}

std::int64_t j_max_bound(const Schedule& s, double N) {
  const double re = s.c * std::sqrt(s.eta);
  const double q = re / (1.0 + re) - s.eta;
  const double v = std::floor(N / (s.t0 * q) - (s.beta - s.eta) / q) + 1.0;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(v));
}

Budget complexity_budget(const Schedule& s, double nu, double t0, double eps, double zeta_norm) {
  Schedule tmp = s;
  tmp.nu = nu;
  tmp.t0 = t0;
  tmp.M0 = m0_constant(s.c, s.beta, nu);
  return Budget{k_max_bound(tmp, eps), j_max_bound(tmp, s.kappa * zeta_norm)};
}

// ---------------------------------------------------------------------------
// s-mapping and decrement

SMapResult s_mapping(const Barrier& F, const MonotoneOp& A, const Vec& anchor, const Vec& z, double t,
                     double delta, const Vec* warm) {
  if (!(t > 0.0)) throw UsageError("s_mapping: t must be positive");
  if (!F.in_domain(anchor) || !F.in_domain(z)) throw DomainError("s_mapping: point not interior");
  const Metric H = F.metric(anchor);
  // t grad F(z) + t H (s - z), centered at z.
  SubSolution sol = A.solve_linearized(H, F.grad(z), t, delta, warm, &z);
  return SMapResult{std::move(sol.w), std::move(sol.cert)};
}

namespace {

struct Decrement {
  double lambda;
  Vec s;
};

Decrement decrement_full(const Barrier& F, const MonotoneOp& A, const Vec& z, const Metric& H, double t,
                         double delta_eval, const Vec* warm = nullptr) {
  SubSolution sol = A.solve_linearized(H, F.grad(z), t, delta_eval, warm, &z);
  return Decrement{H.norm(z - sol.w), std::move(sol.w)};
}

}  // namespace

double newton_decrement(const Barrier& F, const MonotoneOp& A, const Vec& z, double t, double delta_eval) {
  if (!F.in_domain(z)) throw DomainError("newton_decrement: point not interior");
  if (!(t > 0.0)) throw UsageError("newton_decrement: t must be positive");
  return decrement_full(F, A, z, F.metric(z), t, delta_eval).lambda;
}

// ---------------------------------------------------------------------------
// fixed-t schemes

StepInfo fgn_step(const Barrier& F, const MonotoneOp& A, const Vec& z, double t, double delta) {
  if (!F.in_domain(z)) throw DomainError("fgn_step: point not interior");
  const Metric H = F.metric(z);
  const Decrement ref = decrement_full(F, A, z, H, t, 1e-10);
  StepInfo info;
  info.lambda_before = ref.lambda;
  info.delta_target = delta;
  info.in_region = ref.lambda + delta < 1.0;
  if (!info.in_region)
    spdlog::warn("fgn_step: lambda + delta = {} >= 1, outside the guaranteed region", ref.lambda + delta);
  const Vec warm = z;
  SubSolution sol = A.solve_linearized(H, F.grad(z), t, delta, &warm, &z);
  info.z = std::move(sol.w);
  info.delta_achieved = sol.cert.delta_achieved;
  info.delta_true = H.norm(info.z - ref.s);
  info.cert = std::move(sol.cert);
  if (!F.in_domain(info.z)) throw DomainError("fgn_step: full step left the domain");
  return info;
}

StepInfo dgn_step(const Barrier& F, const MonotoneOp& A, const Vec& z, double t, double delta) {
  if (!F.in_domain(z)) throw DomainError("dgn_step: point not interior");
  const Metric H = F.metric(z);
  const Vec warm = z;
  SubSolution sol = A.solve_linearized(H, F.grad(z), t, delta, &warm, &z);
  double lt = H.norm(sol.w - z);
  const double cap = lt * lt / (1.0 + lt);
  if (sol.cert.delta_achieved > cap && cap > 1e-14) {
    const Vec w0 = sol.w;
    // below ~1e-14 the certificate is dominated by rounding, so the
    // refinement target is floored there
    sol = A.solve_linearized(H, F.grad(z), t, std::max(0.5 * cap, 1e-14), &w0, &z);
    lt = H.norm(sol.w - z);
  }
  StepInfo info;
  info.lambda_before = lt;
  info.delta_target = std::min(delta, cap);
  info.delta_achieved = sol.cert.delta_achieved;
  info.alpha = 1.0 / (1.0 + lt);
  info.z = z + info.alpha * (sol.w - z);
  info.cert = std::move(sol.cert);
  if (!F.in_domain(info.z)) throw DomainError("dgn_step: damped step left the domain");
  return info;
}

FixedTRun fixed_t_newton(const Barrier& F, const MonotoneOp& A, Vec z, double t, bool damped, double tol,
                         std::int64_t max_iters, double delta,
                         const std::function<void(const Vec&, double, TraceRow&)>& hook) {
  if (!(t > 0.0)) throw UsageError("fixed_t_newton: t must be positive");
  FixedTRun run;
  // lambda at the current point, known once the first step has been taken
  double lam = newton_decrement(F, A, z, t, 1e-10);
  for (std::int64_t k = 0; k < max_iters; ++k) {
    if (!damped && lam <= tol) {
      run.converged = true;
      break;
    }
    const auto clock0 = std::chrono::steady_clock::now();
    const double d = std::max(std::min(delta, 0.01 * lam * lam), 1e-14);
    const StepInfo step = damped ? dgn_step(F, A, z, t, d) : fgn_step(F, A, z, t, d);
    TraceRow row;
    row.phase = damped ? "dgn" : "fgn";
    row.k = k;
    row.t = t;
    row.lambda = step.lambda_before;
    row.delta_target = step.delta_target;
    row.delta_achieved = step.delta_achieved;
    row.sigma = 0.0;
    row.residual_primary = step.delta_true;
    row.residual_aux = step.alpha;
    if (hook) hook(z, t, row);
    z = step.z;
    row.wall_ms = elapsed_ms(clock0);
    run.rows.push_back(row);
    if (damped && step.lambda_before <= tol) {
      run.converged = true;
      break;
    }
    if (!damped) lam = newton_decrement(F, A, z, t, 1e-10);
  }
  if (!damped && !run.converged && lam <= tol) run.converged = true;
  run.z = std::move(z);
  run.lambda = damped ? (run.rows.empty() ? 0.0 : run.rows.back().lambda) : lam;
  return run;
}

// ---------------------------------------------------------------------------
// path following

TraceRow pfgn_step(const Barrier& F, const MonotoneOp& A, PathState& st, const Schedule& sched,
                   const SolveOptions& opt, std::int64_t k) {
  const auto clock0 = std::chrono::steady_clock::now();
  const Metric H = F.metric(st.z);
  const Vec gz = F.grad(st.z);
  const double sigma = opt.adaptive_sigma ? sigma_adaptive(sched.c, sched.beta, H.dual_norm(gz)) : sched.sigma_bar;
  const double t_new = (1.0 - sigma) * st.t;

  // Decrement at the new t before moving (intermediate neighborhood check).
  const Decrement mid = decrement_full(F, A, st.z, H, t_new, opt.delta_eval);

  // The step itself, inexact at the schedule tolerance, warm started at z.
  const Vec warm = st.z;
  SubSolution sol = A.solve_linearized(H, gz, t_new, sched.delta_t_bar, &warm, &st.z);
  if (!F.in_domain(sol.w)) throw DomainError("pfgn_step: iterate left the domain");

  const Metric Hn = F.metric(sol.w);
  const Decrement post = decrement_full(F, A, sol.w, Hn, t_new, opt.delta_eval, &mid.s);

  // xi = e - t [grad F(z) + H (z+ - z)] lies in A(z+).
  const Vec xi = sol.cert.e - t_new * (gz + H.apply(sol.w - st.z));

  TraceRow row;
  row.phase = "2";
  row.k = k + 1;
  row.t = t_new;
  row.lambda = post.lambda;
  row.lambda_mid = mid.lambda;
  row.delta_target = sched.delta_t_bar;
  row.delta_achieved = sol.cert.delta_achieved;
  row.sigma = sigma;
  row.residual_primary = Hn.dual_norm(xi);
  row.residual_aux = path_residual_bound(F.nu(), mid.lambda, sol.cert.delta_achieved, t_new);

  if (opt.debug_asserts) {
    const double slack = F.dim() > 50 ? 1e-6 : 1e-9;
    if (mid.lambda > intermediate_bound(sched.c, sched.beta) + slack)
      spdlog::warn("pfgn k={}: intermediate decrement {} exceeds {}", k + 1, mid.lambda,
                   intermediate_bound(sched.c, sched.beta));
    if (post.lambda > sched.beta + slack)
      spdlog::warn("pfgn k={}: decrement {} left the beta-neighborhood (before step {})", k + 1, post.lambda,
                   mid.lambda);
  }

  st.z = std::move(sol.w);
  st.t = t_new;
  st.lambda = post.lambda;
  row.wall_ms = elapsed_ms(clock0);
  return row;
}

TraceRow phase1_step(const Barrier& F, const MonotoneOp& A, const Vec& zeta0, Phase1State& st,
                     const Schedule& sched, const SolveOptions& opt, std::int64_t j) {
  const auto clock0 = std::chrono::steady_clock::now();
  const Metric H = F.metric(st.z);
  const double N = H.dual_norm(zeta0);
  const double step = N > 0.0 ? sched.phase1_step / N : st.tau;
  const double tau_new = std::max(0.0, st.tau - step);
  const MonotoneOp Ash = A.shifted(tau_new * zeta0);

  const Vec warm = st.z;
  SubSolution sol = Ash.solve_linearized(H, F.grad(st.z), sched.t0, sched.delta_tau_bar, &warm, &st.z);
  if (!F.in_domain(sol.w)) throw DomainError("phase1_step: iterate left the domain");

  const Metric Hn = F.metric(sol.w);
  const Decrement post = decrement_full(F, Ash, sol.w, Hn, sched.t0, opt.delta_eval, &sol.w);
  const double Nn = Hn.dual_norm(zeta0);

  TraceRow row;
  row.phase = "1";
  row.k = j + 1;
  row.t = tau_new;
  row.lambda = post.lambda;
  row.delta_target = sched.delta_tau_bar;
  row.delta_achieved = sol.cert.delta_achieved;
  row.sigma = step;
  row.residual_primary = tau_new * Nn;
  row.residual_aux = post.lambda + tau_new * Nn / sched.t0;
  if (opt.debug_asserts && post.lambda > sched.eta + 1e-9)
    spdlog::warn("phase1 j={}: decrement {} exceeds eta {}", j + 1, post.lambda, sched.eta);

  st.z = std::move(sol.w);
  st.tau = tau_new;
  st.lambda_hat = post.lambda;
  row.wall_ms = elapsed_ms(clock0);
  return row;
}

SolveResult algorithm1(const Barrier& F, const MonotoneOp& A, const Vec& z_hat0, const Schedule& sched,
                       const SolveOptions& opt) {
  if (!(opt.eps > 0.0)) throw UsageError("algorithm1: eps must be positive");
  if (!F.in_domain(z_hat0)) throw DomainError("algorithm1: starting point is not interior");
  require_dim(A.dim(), F.dim(), "algorithm1: operator");

  SolveResult res;
  res.trace.nu = F.nu();
  Vec z = z_hat0;
  const double t0 = sched.t0;

  // ----- phase one
  if (!opt.skip_phase1) {
    const auto clock0 = std::chrono::steady_clock::now();
    const Vec xi0 = A.pick_element(z_hat0);
    const Vec zeta0 = t0 * F.grad(z_hat0) + xi0;
    const double N0 = F.metric(z_hat0).dual_norm(zeta0);
    res.trace.zeta_norm0 = N0;
    res.trace.zeta_norm_max = N0;
    res.budget = complexity_budget(sched, F.nu(), t0, opt.eps, N0);
    res.budget_running = res.budget;

    TraceRow r0;
    r0.phase = opt.phase1 == SolveOptions::Phase1::AuxiliaryPath ? "1" : "damped";
    r0.k = 0;
    r0.t = 1.0;
    r0.lambda = 0.0;
    r0.residual_primary = N0;
    r0.residual_aux = N0 / t0;
    r0.wall_ms = elapsed_ms(clock0);

    if (opt.phase1 == SolveOptions::Phase1::AuxiliaryPath) {
      res.trace.rows.push_back(r0);
      Phase1State st{z_hat0, 1.0, 0.0};
      std::int64_t j = 0;
      double Nj = N0;
      while (true) {
        if (st.tau * Nj <= t0 * (sched.beta - sched.eta) || st.tau <= 0.0) break;
        const std::int64_t cap =
            opt.max_phase1 >= 0 ? opt.max_phase1
                                : std::max(res.budget.j_max, j_max_bound(sched, res.trace.zeta_norm_max));
        if (j >= cap) {
          res.z = st.z;
          res.trace.phase1_iters = j;
          throw BudgetExceeded("algorithm1: phase-one iteration cap exceeded", res);
        }
        TraceRow row = phase1_step(F, A, zeta0, st, sched, opt, j);
        ++j;
        Nj = row.t > 0.0 ? row.residual_primary / row.t : F.metric(st.z).dual_norm(zeta0);
        res.trace.zeta_norm_max = std::max(res.trace.zeta_norm_max, Nj);
        if (opt.row_hook) opt.row_hook(st.z, t0, row);
        res.trace.rows.push_back(row);
      }
      res.budget_running.j_max = j_max_bound(sched, res.trace.zeta_norm_max);
      res.trace.phase1_iters = j;
      z = st.z;
    } else {
      // Damped generalized Newton at fixed t0 until lambda_{t0} <= beta.
      double lam = newton_decrement(F, A, z, t0, opt.delta_eval);
      r0.lambda = lam;
      res.trace.rows.push_back(r0);
      std::int64_t j = 0;
      const std::int64_t cap = opt.max_phase1 >= 0 ? opt.max_phase1 : 10000;
      while (lam > sched.beta) {
        if (j >= cap) {
          res.z = z;
          res.trace.phase1_iters = j;
          throw BudgetExceeded("algorithm1: damped phase-one cap exceeded", res);
        }
        const auto c1 = std::chrono::steady_clock::now();
        StepInfo s = dgn_step(F, A, z, t0, sched.delta_tau_bar);
        z = s.z;
        lam = newton_decrement(F, A, z, t0, opt.delta_eval);
        ++j;
        TraceRow row;
        row.phase = "damped";
        row.k = j;
        row.t = t0;
        row.lambda = lam;
        row.delta_target = s.delta_target;
        row.delta_achieved = s.delta_achieved;
        row.sigma = s.alpha;
        row.wall_ms = elapsed_ms(c1);
        res.trace.rows.push_back(row);
      }
      res.trace.phase1_iters = j;
    }
  } else {
    res.budget.k_max = k_max_bound(sched, opt.eps);
    res.budget_running = res.budget;
  }

  // ----- phase two
  const auto clock1 = std::chrono::steady_clock::now();
  PathState st{z, t0, 0.0};
  {
    const Metric H = F.metric(z);
    const Decrement d = decrement_full(F, A, z, H, t0, opt.delta_eval);
    st.lambda = d.lambda;
    TraceRow row;
    row.phase = "2";
    row.k = 0;
    row.t = t0;
    row.lambda = d.lambda;
    row.sigma = 0.0;
    const Vec xi = A.pick_element(z);
    row.residual_primary = H.dual_norm(xi);
    row.residual_aux = std::numeric_limits<double>::quiet_NaN();
    row.wall_ms = elapsed_ms(clock1);
    if (opt.row_hook) opt.row_hook(z, t0, row);
    res.trace.rows.push_back(row);
    if (opt.debug_asserts && d.lambda > sched.beta)
      spdlog::warn("phase two starts outside the beta-neighborhood: lambda = {}", d.lambda);
  }
  const std::int64_t cap = opt.max_iters >= 0 ? opt.max_iters : res.budget.k_max;
  std::int64_t k = 0;
  while (sched.M0 * st.t > opt.eps) {
    if (k >= cap) {
      res.z = st.z;
      res.t = st.t;
      res.lambda = st.lambda;
      res.trace.phase2_iters = k;
      throw BudgetExceeded("algorithm1: phase-two iteration cap exceeded", res);
    }
    TraceRow row = pfgn_step(F, A, st, sched, opt, k);
    if (opt.row_hook) opt.row_hook(st.z, st.t, row);
    res.trace.rows.push_back(row);
    ++k;
  }
  res.trace.phase2_iters = k;
  res.z = st.z;
  res.t = st.t;
  res.lambda = st.lambda;
  res.converged = true;
  return res;
}

}  // namespace scinc
