#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scinc/linalg.hpp"

namespace scinc {

// Per-coordinate  h_i(u) = weight_i |u - center_i| + lin_i u + indicator[lo_i, hi_i](u).
// Covers weighted l1 with offset, box indicators, linear terms and point
// indicators (lo = hi).
struct Separable {
  Vec weight, center, lin, lo, hi;
  Index dim() const { return weight.size(); }
};

// indicator{u : B u = d} + <c, u>. B may have zero rows (pure linear term).
struct AffineLinear {
  Mat B;
  Vec d, c;
  Index dim() const { return c.size(); }
};

// psi(y) = h*(y) + <b, y> for a separable h.
struct ConjPlusLinear {
  Separable h;
  Vec b;
  Index dim() const { return b.size(); }
};

class ProxFn {
 public:
  enum class Kind { Separable, Affine, ConjLinear, Blocks };

  ProxFn() : ProxFn(zero(0)) {}
  explicit ProxFn(Separable s);
  explicit ProxFn(AffineLinear a);
  explicit ProxFn(ConjPlusLinear c);
  explicit ProxFn(std::vector<ProxFn> blocks);

  static ProxFn zero(Index p);
  static ProxFn linear(Vec c);
  static ProxFn l1(Index p, double rho = 1.0);
  static ProxFn box(Vec lo, Vec hi);
  static ProxFn point(Vec m);
  static ProxFn affine(Mat B, Vec d, Vec c);
  // psi = g* + <b,.> for separable g; a point indicator collapses to a linear term.
  static ProxFn conj_plus_linear(const ProxFn& g, Vec b);

  Kind kind() const { return kind_; }
  Index dim() const { return dim_; }
  const Separable& separable() const { return sep_; }
  const AffineLinear& affine_part() const { return aff_; }
  const ConjPlusLinear& conj_part() const { return conj_; }
  const std::vector<ProxFn>& blocks() const { return blocks_; }

  // True when the function is a linear term plus an affine-subspace indicator,
  // so the composite subproblem is a linear KKT system.
  bool is_affine() const;
  // True when each coordinate carries its own scalar function (diagonal prox).
  bool is_separable() const;
  // Flatten to a single AffineLinear (requires is_affine()).
  AffineLinear as_affine() const;

  double value(const Vec& u) const;  // +inf outside the domain
  bool in_domain(const Vec& u, double tol = 1e-9) const;

  // argmin_u G(u) + 0.5 sum_i q_i (u_i - x_i)^2, for separable pieces and
  // affine pieces alike.
  Vec prox_diag(const Vec& x, const Vec& q) const;
  // argmin_u G(u) + 0.5 ||u - x||_Q^2 for any SPD Q when is_affine(), or a
  // diagonal Q otherwise; capability error for the remaining pairings.
  Vec prox(const Vec& x, const Metric& Q) const;

  // Per-coordinate subdifferential interval [lo_i, hi_i] at u (separable
  // pieces only; infinite endpoints allowed).
  void subdiff_interval(const Vec& u, Vec& lo, Vec& hi) const;

  // Some gamma in dG(u) making ||s + gamma||*_H small. Exact minimizer when
  // H is diagonal or G is affine; otherwise a coordinatewise choice, which is
  // still a valid member (upper bound on the distance). *exact reports which.
  Vec closest_subgradient(const Vec& u, const Vec& s, const Metric& H, bool* exact = nullptr) const;
  // Minimal Euclidean norm subgradient; ties at kinks resolve to 0.
  Vec min_norm_subgradient(const Vec& u) const;

  // Projection of v onto dG*(y) for separable G (an interval per coordinate).
  Vec project_conj_subdiff(const Vec& y, const Vec& v) const;

  // u -> G(c + u), up to an additive constant.
  ProxFn translated(const Vec& c) const;

  std::string describe() const;

 private:
  Kind kind_ = Kind::Separable;
  Index dim_ = 0;
  Separable sep_;
  AffineLinear aff_;
  ConjPlusLinear conj_;
  std::vector<ProxFn> blocks_;
};

// Scaled prox of psi(y) = g*(y) + <b, y> through the prox of g; Q diagonal.
// prox_{Q psi}(y) = y - Q b - Q prox_{Q^{-1} g}(Q^{-1} y - b)
Vec prox_psi_from_g(const ProxFn& g, const Vec& b, const Vec& q, const Vec& y);

// Scalar conjugate of a separable coordinate function and its argmax set.
double separable_conj_value(const Separable& h, Index i, double y);
void separable_conj_argmax(const Separable& h, Index i, double y, double& lo, double& hi);

// ---------------------------------------------------------------------------
// Composite-quadratic subproblem
//   find w with 0 in t (H (w - c) + q) + K w + a + dG(w),
// the linearized inclusion generated by every scheme. K is a monotone linear
// map (K + K^T PSD, empty matrix means zero), H = Hessian at the anchor and
// c an optional center (empty means zero). Passing the center instead of
// folding -Hc into q avoids the cancellation that ruins accuracy once H is
// badly conditioned; solvers work on the step w - c.

struct Subproblem {
  const Metric* H = nullptr;
  Vec q;
  double t = 1.0;
  const Mat* K = nullptr;  // may be null
  Vec a;                   // may be empty
  const ProxFn* G = nullptr;
  double delta_target = 0.0;
  std::optional<Vec> warm_start;
  Vec center;

  Index dim() const { return q.size(); }
  // B(w) = t(H(w - c) + q) + Kw + a, the single-valued part.
  Vec smooth(const Vec& w) const;
};

struct InexactCertificate {
  Vec e;                        // member of t(Hw+q) + Kw + a + dG(w)
  double delta_achieved = 0.0;  // ||e||*_H / t
  int inner_iterations = 0;
  bool exact = false;
  std::string method;
};

struct SubSolution {
  Vec w;
  InexactCertificate cert;
};

using Subsolver = std::function<SubSolution(const Subproblem&)>;

// Certificate for a given candidate w: e = B(w) + gamma, gamma in dG(w)
// chosen by closest_subgradient.
InexactCertificate certify(const Subproblem& sp, const Vec& w);

struct SubsolveOptions {
  int max_iters = -1;  // -1 means 10 p + 500
  bool allow_polish = true;
};

SubSolution inexact_subsolve(const Subproblem& sp, const SubsolveOptions& opt = {});

// Runs solve on the equivalent center-free problem in the step u = w - c
// (G translated, a + K c) and maps the answer back. The certificate carries
// over unchanged since both problems share the same inclusion.
SubSolution solve_centered(const Subproblem& sp, const Subsolver& solve);

// Convenience wrapper matching the module interface: K = 0, a = 0.
SubSolution inexact_subsolve(const Metric& H, const Vec& q, const ProxFn& g, double t, double delta_target);

}  // namespace scinc
