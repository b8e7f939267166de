#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "scinc/errors.hpp"

namespace scinc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

namespace tol {
inline constexpr double factor_residual = 1e-10;
inline constexpr double solve_residual = 1e-8;
}  // namespace tol

void require_finite(const Vec& v, const char* what);
void require_dim(Index got, Index want, const char* what);

// Local metric induced by a barrier Hessian at a fixed point. Holds the
// Hessian and its Cholesky factor; construction fails for matrices that are
// not positive definite to working precision. Diagonal Hessians skip the
// dense factorization.
class Metric {
 public:
  Metric() = default;
  explicit Metric(Mat hessian);
  static Metric diagonal(Vec d);
  // H = J J^T for a given n x k factor J (k >= n). The triangular factor is
  // taken from a QR decomposition of J^T, which avoids the squared
  // conditioning of forming and factoring H.
  static Metric from_factor(const Mat& J);

  Index dim() const { return n_; }
  bool is_diagonal() const { return diagonal_; }
  const Vec& diag() const { return d_; }  // valid only when is_diagonal()
  Mat hessian() const;
  Mat factor() const;  // lower-triangular L with H = L L^T

  Vec apply(const Vec& u) const;
  Vec solve(const Vec& v) const;
  double norm(const Vec& u) const;
  double dual_norm(const Vec& v) const;
  double condition_estimate() const { return cond_; }

  // Restriction to the index block [start, start+len). For block-diagonal
  // products this is exact; otherwise it is the principal sub-Hessian.
  Metric block(Index start, Index len) const;

 private:
  Index n_ = 0;
  bool diagonal_ = false;
  Vec d_;
  Mat h_;
  Mat l_;  // lower-triangular, H = l_ l_^T
  double cond_ = 1.0;
};

inline double local_norm(const Metric& m, const Vec& u) { return m.norm(u); }
inline double dual_local_norm(const Metric& m, const Vec& v) { return m.dual_norm(v); }
inline Vec solve_metric(const Metric& m, const Vec& v) { return m.solve(v); }

// Full column-stacked vectorization of symmetric matrices (length n^2).
Vec sym_vec(const Mat& m);
Mat sym_mat(const Vec& v);
Index sym_order(Index p);
Mat symmetrize(const Mat& m);

// Largest eigenvalue of an SPD operator by the power method.
double power_max_eig(const Mat& a, int iters = 20);

}  // namespace scinc
