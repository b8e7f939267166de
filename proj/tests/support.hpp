#pragma once
// Shared helpers for the test binaries: seeded random data and finite
// differences. Kept independent of the library's own generators.
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace testsupport {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline std::mt19937_64& rng() {
  static std::mt19937_64 g(20240611);
  return g;
}

inline double unif(double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline Vec rand_vec(Eigen::Index n, double lo = -1.0, double hi = 1.0) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = unif(lo, hi);
  return v;
}

inline Mat rand_mat(Eigen::Index r, Eigen::Index c) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = unif();
  return m;
}

inline Mat rand_sym(Eigen::Index n) {
  const Mat g = rand_mat(n, n);
  return 0.5 * (g + g.transpose());
}

// Random SPD matrix with eigenvalues in [lo, hi].
inline Mat rand_spd(Eigen::Index n, double lo = 0.5, double hi = 2.0) {
  Eigen::HouseholderQR<Mat> qr(rand_mat(n, n));
  const Mat Q = qr.householderQ();
  return Q * rand_vec(n, lo, hi).asDiagonal() * Q.transpose();
}

inline Vec fd_grad(const std::function<double(const Vec&)>& f, const Vec& z) {
  const double h = 1e-6 * (1.0 + z.cwiseAbs().maxCoeff());
  Vec g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Vec a = z, b = z;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& z) {
  const double h = 1e-6 * (1.0 + z.cwiseAbs().maxCoeff());
  const Eigen::Index m = f(z).size();
  Mat J(m, z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Vec a = z, b = z;
    a(i) += h;
    b(i) -= h;
    J.col(i) = (f(a) - f(b)) / (2.0 * h);
  }
  return J;
}

inline double rel_err(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

inline double rel_err(const Vec& got, const Vec& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

inline double rel_err(const Mat& got, const Mat& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

}  // namespace testsupport
