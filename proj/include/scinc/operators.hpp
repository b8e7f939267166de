#pragma once

#include "scinc/barriers.hpp"
#include "scinc/prox.hpp"

namespace scinc {

// Maximally monotone operator of the form
//   A(z) = dG(z) + K z + a
// with G proper closed convex (ProxFn), K a monotone linear map
// (K + K^T PSD; empty means zero) and a constant shift a. Saddle operators
// are the case of skew K.
struct MonotoneOp {
  ProxFn G;
  Mat K;  // 0x0 for none
  Vec a;  // empty for none
  // Optional structured solver for the linearized inclusion. When set it
  // replaces the generic inexact_subsolve.
  Subsolver solver;

  Index dim() const { return G.dim(); }
  bool has_linear() const { return K.size() > 0; }
  // K z + a, the single-valued part.
  Vec single_valued(const Vec& z) const;
  // Some element of A(z); minimal-norm subgradient for G.
  Vec pick_element(const Vec& z) const;
  // Distance from w to A(z) in the dual norm of H; *exact flags whether the
  // value is the true distance or a certified upper bound.
  double member_residual(const Vec& z, const Vec& w, const Metric& H, bool* exact = nullptr) const;
  // A - s: the same operator with the constant shifted by -s.
  MonotoneOp shifted(const Vec& s) const;

  // Solve 0 in t(H (w - c) + q) + A(w) to relative accuracy delta; c = 0
  // when center is null.
  SubSolution solve_linearized(const Metric& H, const Vec& q, double t, double delta,
                               const Vec* warm = nullptr, const Vec* center = nullptr) const;
};

MonotoneOp subdiff_operator(ProxFn g);
MonotoneOp constant_operator(Vec c);
// z = (x, y) with x in R^n, y in R^m and L an m x n matrix:
//   A(z) = [dg(x) - L^T y ; dpsi(y) + L x]
MonotoneOp saddle_operator(ProxFn g, ProxFn psi, const Mat& L);

// Scaled resolvent: w with 0 in t Q (w - z) + A(w).
SubSolution resolvent(const MonotoneOp& A, const Metric& Q, const Vec& z, double t, double delta = 0.0);

struct ResidualValue {
  double value = 0.0;
  bool exact = false;
};

// min over e in A(z) of ||e||*_z (the eps-solution measure).
ResidualValue eps_solution_residual(const MonotoneOp& A, const Barrier& F, const Vec& z);

}  // namespace scinc
