#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scinc/operators.hpp"

namespace scinc {

// ---------------------------------------------------------------------------
// Parameter schedules

double beta_upper(double c);                        // 0.5 (1 + 2c^2 - sqrt(1 + 4c^2))
double sigma_bar(double c, double beta, double nu);
double delta_t_bar(double c, double beta);
double sigma_adaptive(double c, double beta, double grad_dual_norm);
double intermediate_bound(double c, double beta);   // c sqrt(beta) / (1 + c sqrt(beta))
double m0_constant(double c, double beta, double nu);
double theta_dual(double c, double beta);
double fgn_delta_bar(double beta);                  // neighborhood tolerance of the full-step scheme
double fgn_rate(double beta);                       // (2 - 4b + b^2)/(1 - 2b)^3
double dgn_rate(double beta);                       // (2b^2 + 4b + 3)/(1 - b^2 (2b^2 + 4b + 3))
double key_estimate_rhs(double lambda, double delta);  // right side of the key estimate
double path_residual_bound(double nu, double lambda, double delta, double t);

struct Schedule {
  double c = 0.95;
  double beta = 0.0870;
  double eta = 0.0435;
  double nu = 1.0;
  double kappa = 1.0;
  double t0 = 1.0;
  double sigma_bar = 0.0;
  double delta_t_bar = 0.0;
  double delta_tau_bar = 0.0;
  double phase1_step = 0.0;  // t0 (c sqrt(eta)/(1 + c sqrt(eta)) - eta); divided by ||zeta||* each step
  double M0 = 0.0;
  double theta = 0.0;
};

// Validates (c, beta, eta) and fills every derived constant. t0 defaults to kappa.
Schedule make_schedule(double nu, double kappa, double c = 0.95, double beta = 0.0870,
                       std::optional<double> eta = std::nullopt, std::optional<double> t0 = std::nullopt);

struct Budget {
  std::int64_t k_max = 0;
  std::int64_t j_max = 0;
};

// zeta_norm stands in for ||zeta^0||* at the analytical center (heuristic
// proxy, multiplied by kappa as the phase-one bound prescribes).
Budget complexity_budget(const Schedule& s, double nu, double t0, double eps, double zeta_norm);
std::int64_t k_max_bound(const Schedule& s, double eps);
// Phase-one bound with kappa ||zeta||*_center replaced by a given number N.
std::int64_t j_max_bound(const Schedule& s, double N);

// ---------------------------------------------------------------------------
// Iteration records

struct TraceRow {
  std::string phase;  // "1", "2", "fgn", "dgn", "damped"
  std::int64_t k = 0;
  double t = 0.0;     // t_k, or tau_j in phase one
  double lambda = 0.0;
  double delta_target = 0.0;
  double delta_achieved = 0.0;
  double sigma = 0.0;
  double residual_primary = 0.0;
  double residual_aux = 0.0;
  double wall_ms = 0.0;
  // Not serialized in the CSV; kept for in-process checks.
  double lambda_mid = -1.0;  // decrement at the new t before the step (phase two)
};

struct SolveTrace {
  std::vector<TraceRow> rows;
  double nu = 0.0;
  std::int64_t phase1_iters = 0;
  std::int64_t phase2_iters = 0;
  double zeta_norm0 = 0.0;     // ||zeta^0||* at the phase-one start
  double zeta_norm_max = 0.0;  // running maximum over phase-one iterates
};

struct IterState {
  Vec z;
  double t = 0.0;
  double lambda = 0.0;
  double delta_used = 0.0;
  int phase = 2;
  std::int64_t k = 0;
};

// ---------------------------------------------------------------------------
// Core maps

struct SMapResult {
  Vec s;
  InexactCertificate cert;
};

// delta-approximation of the solution s of
//   0 in t grad F(z) + t H_anchor (s - z) + A(s).
SMapResult s_mapping(const Barrier& F, const MonotoneOp& A, const Vec& anchor, const Vec& z, double t,
                     double delta, const Vec* warm = nullptr);

// ||z - s_z(z; t)||_z using a near-exact solve (delta_eval).
double newton_decrement(const Barrier& F, const MonotoneOp& A, const Vec& z, double t, double delta_eval = 1e-8);

struct StepInfo {
  Vec z;
  double lambda_before = 0.0;  // lambda_t(z) (fgn) or lambda-tilde (dgn)
  double delta_target = 0.0;
  double delta_achieved = 0.0;
  double delta_true = -1.0;  // ||z+ - zbar+||_z when a reference solve was made
  double alpha = 1.0;
  bool in_region = true;
  InexactCertificate cert;
};

// Full step z+ = s_z(z; t) to accuracy delta.
StepInfo fgn_step(const Barrier& F, const MonotoneOp& A, const Vec& z, double t, double delta);
// Damped step with alpha = 1/(1 + lambda-tilde); delta is capped at
// lambda-tilde^2/(1 + lambda-tilde).
StepInfo dgn_step(const Barrier& F, const MonotoneOp& A, const Vec& z, double t, double delta);

// Fixed-t iteration with full (fgn) or damped (dgn) steps from z until the
// decrement falls to tol. Row k records the decrement at z^k (lambda-tilde
// for dgn) and the certificate of the step taken from it. Each step uses
// accuracy min(delta, 0.01 lambda^2), floored at 1e-14. hook, if set, sees
// z^k and may overwrite the residual columns.
struct FixedTRun {
  Vec z;
  double lambda = 0.0;
  std::vector<TraceRow> rows;
  bool converged = false;
};
FixedTRun fixed_t_newton(const Barrier& F, const MonotoneOp& A, Vec z, double t, bool damped, double tol,
                         std::int64_t max_iters, double delta = 1e-8,
                         const std::function<void(const Vec&, double, TraceRow&)>& hook = {});

struct SolveOptions {
  double eps = 1e-6;
  std::int64_t max_iters = -1;  // cap on phase-two iterations; -1 uses k_max
  std::int64_t max_phase1 = -1;
  bool adaptive_sigma = false;
  bool debug_asserts = false;
  double delta_eval = 1e-8;
  enum class Phase1 { AuxiliaryPath, DampedNewton } phase1 = Phase1::AuxiliaryPath;
  bool skip_phase1 = false;  // start phase two directly at z0 (caller guarantees lambda <= beta)
  // Optional per-iterate hook for instance-specific residuals (dual runs).
  std::function<void(const Vec& z, double t, TraceRow& row)> row_hook;
};

struct PathState {
  Vec z;
  double t = 0.0;
  double lambda = 0.0;
};

// One path-following step: t+ = (1 - sigma) t, then the s-mapping at anchor z.
TraceRow pfgn_step(const Barrier& F, const MonotoneOp& A, PathState& st, const Schedule& sched,
                   const SolveOptions& opt, std::int64_t k);

struct Phase1State {
  Vec z;
  double tau = 1.0;
  double lambda_hat = 0.0;
};

// One auxiliary-path step on the shifted operator A - tau zeta0 at fixed t0.
TraceRow phase1_step(const Barrier& F, const MonotoneOp& A, const Vec& zeta0, Phase1State& st,
                     const Schedule& sched, const SolveOptions& opt, std::int64_t j);

struct SolveResult {
  Vec z;
  double t = 0.0;
  double lambda = 0.0;
  SolveTrace trace;
  Budget budget;
  Budget budget_running;  // j_max from the running maximum of ||zeta^0||*
  bool converged = false;
};

// Raised when an iteration cap is hit; carries everything computed so far.
struct BudgetExceeded : BudgetError {
  BudgetExceeded(const std::string& w, SolveResult p) : BudgetError(w), partial(std::move(p)) {}
  SolveResult partial;
};

// Two-phase driver: phase one until lambda_{t0} <= beta, then path
// following until M0 t_k <= eps.
SolveResult algorithm1(const Barrier& F, const MonotoneOp& A, const Vec& z_hat0, const Schedule& sched,
                       const SolveOptions& opt);

}  // namespace scinc
