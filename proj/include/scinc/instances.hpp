#pragma once

#include "scinc/newton.hpp"

namespace scinc {

// min_y max_x <y, L x> - g(x) + psi(y) over x in X (barrier f) and y in Y
// (barrier phi). L is m x n with x in R^n, y in R^m.
struct SaddleProblem {
  ProxFn g, psi;
  BarrierPtr f, phi;
  Mat L;
  Subsolver solver;  // optional structured solver for the linearized system
  Vec x0, y0;        // interior starting point

  Index n() const { return g.dim(); }
  Index m() const { return psi.dim(); }
  double nu() const { return f->nu() + phi->nu(); }
  BarrierPtr barrier() const { return barrier_sum(f, phi); }
  MonotoneOp op() const;
  void validate() const;
};

// min g(x) over the closure of dom f.
struct PrimalProblem {
  ProxFn g;
  BarrierPtr f;
  Vec x0;
  void validate() const;
};

// max <c, x> - g(s)  s.t.  L x - s = b,  x in K  (f is a log-homogeneous
// barrier of K with closed-form conjugate). L is p x n.
struct DualConicProblem {
  Vec c_obj, b;
  Mat L;
  ProxFn g;   // on R^p, separable
  BarrierPtr f;
  Vec cone_center;  // a point of int K used by the dual start search
  void validate() const;
};

struct RecoveredPrimal {
  Vec x, s;
  double stationarity = 0.0;  // ||L^T y - c||*_x
  double feasibility = 0.0;   // ||L x - s - b||*_y
  double subgradient = 0.0;   // distance of y to dg(s)
  double central = 0.0;       // ||c - L^T y - t grad f(x)||, Legendre identity check
};

struct SaddleResult {
  Vec x, y;
  SolveResult run;
};

struct PrimalResult {
  Vec x;
  double objective = 0.0;
  SolveResult run;
};

struct DualResult {
  Vec y;
  RecoveredPrimal primal;
  double dual_objective = 0.0;
  double primal_objective = 0.0;
  SolveResult run;
};

SaddleResult solve_saddle(const SaddleProblem& P, const Schedule& sched, const SolveOptions& opt);
PrimalResult solve_primal(const PrimalProblem& P, const Schedule& sched, const SolveOptions& opt);
DualResult solve_dual_conic(const DualConicProblem& P, const Schedule& sched, const SolveOptions& opt,
                            const Vec* y_start = nullptr);

// Schedules with the instance-appropriate nu, kappa and stopping constant.
Schedule saddle_schedule(const SaddleProblem& P, double c, double beta, std::optional<double> eta,
                         std::optional<double> t0);
Schedule primal_schedule(const PrimalProblem& P, double c, double beta, std::optional<double> eta,
                         std::optional<double> t0);
Schedule dual_schedule(const DualConicProblem& P, double c, double beta, std::optional<double> eta,
                       std::optional<double> t0);

BarrierPtr dual_barrier(const DualConicProblem& P);
MonotoneOp dual_operator(const DualConicProblem& P);

RecoveredPrimal recover_primal(const Vec& y, double t, const DualConicProblem& P);

// Strictly dual-feasible start along rho L e_K: doubling then bisection for
// the feasibility threshold, returning twice that rho.
Vec find_dual_start(const DualConicProblem& P);

// Closed-form solver of the linearized saddle system when H is block
// diagonal, g is affine on x (linear term plus equality rows) and psi is
// linear on an unconstrained y. Eliminating y leaves one SPD solve on x and
// a small multiplier system. nx is the length of the x block.
Subsolver saddle_affine_subsolver(Index nx);

// The closed-form step at (X^k, y^k) and t, with the Newton model built at
// the same point.
std::pair<Mat, Vec> saddle_closed_form_step(const Mat& Xk, const Vec& yk, double t, const Mat& C,
                                            const std::vector<Mat>& Ls);

}  // namespace scinc
