#pragma once

#include <memory>
#include <string>
#include <vector>

#include "scinc/linalg.hpp"

namespace scinc {

// A nu-self-concordant barrier over the interior of a closed convex set.
// Log-homogeneous cone barriers can also expose their Fenchel conjugate,
// which lives on the interior of the anti-dual cone.
class Barrier {
 public:
  virtual ~Barrier() = default;

  virtual std::string name() const = 0;
  virtual Index dim() const = 0;
  virtual double nu() const = 0;
  virtual bool log_homogeneous() const = 0;
  // kappa is stored exactly as the theory prescribes: 1 for log-homogeneous
  // barriers and nu + 2 sqrt(nu) otherwise.
  double kappa() const;

  virtual bool in_domain(const Vec& z) const = 0;
  virtual double value(const Vec& z) const = 0;
  virtual Vec grad(const Vec& z) const = 0;
  virtual Mat hessian(const Vec& z) const = 0;
  virtual Metric metric(const Vec& z) const;
  Vec hess_apply(const Vec& z, const Vec& u) const;

  // Direct summands of a product barrier (empty for leaves).
  virtual std::vector<std::shared_ptr<const Barrier>> parts() const { return {}; }

  virtual bool has_conjugate() const { return false; }
  virtual bool conj_in_domain(const Vec& w) const;
  virtual double conj_value(const Vec& w) const;
  virtual Vec conj_grad(const Vec& w) const;
  virtual Mat conj_hessian(const Vec& w) const;
  // Some J with conj_hessian(w) = J J^T; lets products L J be factored by QR.
  virtual Mat conj_hessian_factor(const Vec& w) const;

 protected:
  void check_domain(const Vec& z, const char* op) const;
  void check_conj_domain(const Vec& w, const char* op) const;
};

using BarrierPtr = std::shared_ptr<const Barrier>;

BarrierPtr barrier_orthant(Index p);
BarrierPtr barrier_logdet(Index n);  // acts on column-stacked vec(Z), length n^2
BarrierPtr barrier_box(Index p);     // -sum log(1 - y_i^2) on the unit infinity ball
BarrierPtr barrier_lorentz(Index p); // acts on (z, t) in R^{p+1}
BarrierPtr barrier_sum(BarrierPtr f, BarrierPtr g);

// The conjugate f* viewed as a barrier in its own right on -int K*.
BarrierPtr conjugate_of(BarrierPtr f);

// phi(y) = f*(c_obj - L^T y). L maps the primal cone space (dim n) to the
// dual space (dim m) and is stored as an m x n matrix.
BarrierPtr dual_feasible_barrier(BarrierPtr f, Mat L, Vec c_obj);

double analytical_center_residual(const Barrier& f, const Vec& z);

// Damped Newton minimization of a barrier over a bounded set.
Vec analytical_center(const Barrier& f, Vec z0, double tol = 1e-12, int max_iters = 200);

}  // namespace scinc
