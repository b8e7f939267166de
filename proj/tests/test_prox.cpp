#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "scinc/prox.hpp"
#include "support.hpp"

using namespace scinc;
using testsupport::rand_spd;
using testsupport::rand_vec;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ProxFn l1_box(Index p, double rho, double lo, double hi) {
  Separable s{Vec::Constant(p, rho), Vec::Zero(p), Vec::Zero(p), Vec::Constant(p, lo), Vec::Constant(p, hi)};
  return ProxFn(s);
}

// Accelerated proximal gradient with Euclidean steps, run far past
// convergence: min 0.5 t w'Hw + t q'w + G(w).
Vec fista_reference(const Mat& H, const Vec& q, double t, const ProxFn& G, int iters = 20000) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  const double L = t * es.eigenvalues().maxCoeff();
  const Vec step = Vec::Constant(q.size(), L);
  Vec w = Vec::Zero(q.size()), y = w;
  double th = 1.0;
  for (int k = 0; k < iters; ++k) {
    const Vec grad = t * (H * y + q);
    const Vec wn = G.prox_diag(y - grad / L, step);
    const double thn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * th * th));
    y = wn + ((th - 1.0) / thn) * (wn - w);
    w = wn;
    th = thn;
  }
  return w;
}

// e - B(w) must lie in dG(w) coordinatewise.
void expect_member(const Subproblem& sp, const SubSolution& sol, double tol) {
  const Vec gamma = sol.cert.e - sp.smooth(sol.w);
  Vec lo, hi;
  sp.G->subdiff_interval(sol.w, lo, hi);
  for (Index i = 0; i < gamma.size(); ++i) {
    EXPECT_GE(gamma(i), lo(i) - tol) << i;
    EXPECT_LE(gamma(i), hi(i) + tol) << i;
  }
}

}  // namespace

TEST(Prox, SoftThreshold) {
  const ProxFn g = ProxFn::l1(3, 1.0);
  Vec x(3);
  x << 3.0, -0.5, 1.0;
  const Vec u = g.prox_diag(x, Vec::Ones(3));
  EXPECT_DOUBLE_EQ(u(0), 2.0);
  EXPECT_DOUBLE_EQ(u(1), 0.0);
  EXPECT_DOUBLE_EQ(u(2), 0.0);
  // q scales the threshold as rho / q
  const Vec v = g.prox_diag(x, Vec::Constant(3, 4.0));
  EXPECT_DOUBLE_EQ(v(0), 2.75);
  EXPECT_DOUBLE_EQ(v(1), -0.25);
}

TEST(Prox, BoxClampAndLinear) {
  const ProxFn b = ProxFn::box(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
  Vec x(2);
  x << 2.5, -0.3;
  const Vec u = b.prox_diag(x, rand_vec(2, 0.1, 5.0));
  EXPECT_DOUBLE_EQ(u(0), 1.0);
  EXPECT_DOUBLE_EQ(u(1), -0.3);
  EXPECT_EQ(b.value(Vec::Constant(2, 2.0)), kInf);
  EXPECT_FALSE(b.in_domain(Vec::Constant(2, 2.0)));

  Vec c(2);
  c << 1.0, -2.0;
  const ProxFn lin = ProxFn::linear(c);
  Vec q(2);
  q << 2.0, 4.0;
  const Vec w = lin.prox_diag(x, q);
  EXPECT_NEAR(w(0), 2.5 - 0.5, 1e-15);
  EXPECT_NEAR(w(1), -0.3 + 0.5, 1e-15);
  EXPECT_TRUE(lin.is_affine());
  EXPECT_TRUE(lin.is_separable());
}

TEST(Prox, AffineProxSatisfiesKkt) {
  const Mat B = testsupport::rand_mat(2, 5);
  const Vec d = rand_vec(2), c = rand_vec(5), x = rand_vec(5);
  const ProxFn g = ProxFn::affine(B, d, c);
  const Mat Q = rand_spd(5);
  const Vec u = g.prox(x, Metric(Q));
  EXPECT_LE((B * u - d).norm(), 1e-10);
  // Q(u - x) + c lies in range(B^T)
  const Vec r = Q * (u - x) + c;
  const Vec mu = B.transpose().colPivHouseholderQr().solve(r);
  EXPECT_LE((B.transpose() * mu - r).norm(), 1e-10);
}

TEST(Prox, DenseMetricNeedsAffine) {
  EXPECT_THROW(ProxFn::l1(3).prox(Vec::Zero(3), Metric(rand_spd(3))), CapabilityError);
}

TEST(Prox, Nonexpansive) {
  const ProxFn g = l1_box(6, 0.7, -0.5, 2.0);
  for (int k = 0; k < 200; ++k) {
    const Vec x = rand_vec(6, -3, 3), y = rand_vec(6, -3, 3);
    const Vec a = g.prox_diag(x, Vec::Ones(6)), b = g.prox_diag(y, Vec::Ones(6));
    EXPECT_LE((a - b).norm(), (x - y).norm() * (1.0 + 1e-14));
    // firm nonexpansiveness
    EXPECT_LE((a - b).squaredNorm(), (a - b).dot(x - y) + 1e-14);
  }
}

TEST(Prox, MoreauThroughConjugate) {
  // g = rho |.|_1 so g* is the indicator of [-rho, rho]; psi = g* + <b, .>
  const double rho = 0.8;
  const ProxFn g = ProxFn::l1(4, rho);
  const Vec b = rand_vec(4);
  for (int k = 0; k < 50; ++k) {
    const Vec y = rand_vec(4, -3, 3), q = rand_vec(4, 0.2, 3.0);
    const Vec got = prox_psi_from_g(g, b, q, y);
    const Vec want = (y - q.cwiseProduct(b)).cwiseMax(-rho).cwiseMin(rho);
    EXPECT_LE((got - want).norm(), 1e-12);
  }
  // Moreau: prox_g(x) + prox_{g*}(x) = x with unit weights
  const Vec x = rand_vec(4, -3, 3);
  const Vec pg = g.prox_diag(x, Vec::Ones(4));
  const Vec pc = prox_psi_from_g(g, Vec::Zero(4), Vec::Ones(4), x);
  EXPECT_LE((pg + pc - x).norm(), 1e-14);
}

TEST(Prox, ConjugateOfPointCollapsesToLinear) {
  const Vec m = rand_vec(3), b = rand_vec(3), y = rand_vec(3);
  const ProxFn psi = ProxFn::conj_plus_linear(ProxFn::point(m), b);
  EXPECT_TRUE(psi.is_affine());
  EXPECT_NEAR(psi.value(y), (m + b).dot(y), 1e-14);
}

TEST(Prox, SeparableConjugateScalar) {
  // h(u) = 2|u - 1| on [-1, 3]; h*(y) = max over the kinks and the ends
  Separable h{Vec::Constant(1, 2.0), Vec::Ones(1), Vec::Zero(1), Vec::Constant(1, -1.0), Vec::Constant(1, 3.0)};
  for (double y : {-5.0, -1.0, 0.0, 0.5, 2.0, 7.0}) {
    double best = -kInf;
    for (int i = 0; i <= 40000; ++i) {
      const double u = -1.0 + 4.0 * i / 40000.0;
      best = std::max(best, y * u - 2.0 * std::abs(u - 1.0));
    }
    EXPECT_NEAR(separable_conj_value(h, 0, y), best, 1e-9) << y;
  }
}

TEST(Prox, TranslatedDiffersByConstant) {
  const ProxFn g = l1_box(3, 0.5, -2.0, 2.0);
  const Vec c = rand_vec(3, -0.5, 0.5);
  const ProxFn gt = g.translated(c);
  const Vec u0 = rand_vec(3, -1, 1);
  const double off = gt.value(u0) - g.value(c + u0);
  for (int k = 0; k < 20; ++k) {
    const Vec u = rand_vec(3, -1, 1);
    EXPECT_NEAR(gt.value(u) - g.value(c + u), off, 1e-12);
  }
}

TEST(Prox, ClosestSubgradientDiagonal) {
  const ProxFn g = l1_box(4, 1.0, -1.0, 1.0);
  Vec u(4), s(4);
  u << 0.0, 0.5, 1.0, -1.0;
  s << 0.3, 2.0, -3.0, -4.0;
  bool exact = false;
  const Vec gamma = g.closest_subgradient(u, s, Metric::diagonal(Vec::Ones(4)), &exact);
  EXPECT_TRUE(exact);
  EXPECT_NEAR(gamma(0), -0.3, 1e-15);  // kink: [-1, 1]
  EXPECT_NEAR(gamma(1), 1.0, 1e-15);   // smooth: {1}
  EXPECT_NEAR(gamma(2), 3.0, 1e-15);   // upper bound active: [1, inf)
  EXPECT_NEAR(gamma(3), -1.0, 1e-15);  // lower bound active: (-inf, -1]
  const Vec mn = g.min_norm_subgradient(u);
  EXPECT_EQ(mn(0), 0.0);
  EXPECT_EQ(mn(1), 1.0);
}

TEST(Subsolve, MatchesReferenceWithDenseMetric) {
  for (int trial = 0; trial < 5; ++trial) {
    const Index p = 6;
    const Mat H = rand_spd(p, 0.3, 3.0);
    const Metric M(H);
    const Vec q = rand_vec(p, -2, 2);
    const double t = testsupport::unif(0.2, 2.0);
    const ProxFn G = l1_box(p, 0.4, -1.0, 1.0);
    const SubSolution sol = inexact_subsolve(M, q, G, t, 1e-10);
    const Vec ref = fista_reference(H, q, t, G);
    EXPECT_LE((sol.w - ref).norm(), 1e-6);
    EXPECT_LE(sol.cert.delta_achieved, 1e-10);
    Subproblem sp;
    sp.H = &M;
    sp.q = q;
    sp.t = t;
    sp.G = &G;
    expect_member(sp, sol, 1e-9);
    EXPECT_NEAR(M.dual_norm(sol.cert.e) / t, sol.cert.delta_achieved, 1e-12);
  }
}

TEST(Subsolve, MonotoneLinearPart) {
  const Index p = 5;
  const Mat S = testsupport::rand_mat(p, p);
  const Mat K = (S - S.transpose()) + 0.1 * Mat::Identity(p, p);
  const Metric M(rand_spd(p));
  const ProxFn G = l1_box(p, 0.3, -2.0, 2.0);
  Subproblem sp;
  sp.H = &M;
  sp.q = rand_vec(p);
  sp.t = 0.7;
  sp.K = &K;
  sp.a = rand_vec(p);
  sp.G = &G;
  sp.delta_target = 1e-9;
  const SubSolution sol = inexact_subsolve(sp);
  EXPECT_LE(sol.cert.delta_achieved, 1e-9);
  expect_member(sp, sol, 1e-8);
  const InexactCertificate again = certify(sp, sol.w);
  EXPECT_LE(again.delta_achieved, sol.cert.delta_achieved * (1.0 + 1e-6) + 1e-14);
}

TEST(Subsolve, AffineIsSolvedExactly) {
  const Index p = 5;
  const Mat B = testsupport::rand_mat(2, p);
  const ProxFn G = ProxFn::affine(B, rand_vec(2), rand_vec(p));
  const Metric M(rand_spd(p));
  const SubSolution sol = inexact_subsolve(M, rand_vec(p), G, 1.3, 0.0);
  EXPECT_LE(sol.cert.delta_achieved, 1e-10);
  EXPECT_LE((B * sol.w - G.affine_part().d).norm(), 1e-10);
}

TEST(Subsolve, CenteredEqualsFolded) {
  const Index p = 4;
  const Mat H = rand_spd(p);
  const Metric M(H);
  const ProxFn G = l1_box(p, 0.5, -1.0, 1.0);
  const Vec c = rand_vec(p, -0.5, 0.5), q = rand_vec(p);
  Subproblem a;
  a.H = &M;
  a.q = q;
  a.t = 1.0;
  a.G = &G;
  a.center = c;
  a.delta_target = 1e-12;
  Subproblem b = a;
  b.center = Vec();
  b.q = q - H * c;
  const SubSolution sa = solve_centered(a, [](const Subproblem& s) { return inexact_subsolve(s); });
  const SubSolution sb = inexact_subsolve(b);
  EXPECT_LE((sa.w - sb.w).norm(), 1e-8);
  EXPECT_LE((a.smooth(sa.w) - b.smooth(sa.w)).norm(), 1e-12);
}

TEST(Subsolve, RejectsBadInput) {
  const Metric M(Mat::Identity(3, 3));
  EXPECT_THROW(inexact_subsolve(M, Vec::Zero(2), ProxFn::l1(3), 1.0, 1e-8), UsageError);
  EXPECT_THROW(ProxFn::l1(3).prox_diag(Vec::Zero(3), -Vec::Ones(3)), UsageError);
}
