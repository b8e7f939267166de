#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "scinc/problems.hpp"
#include "support.hpp"

using namespace scinc;
using testsupport::rand_vec;

namespace {

// Generic solve of the same linearized saddle system, no structured solver.
std::pair<Mat, Vec> generic_step(const Mat& Xk, const Vec& yk, double t, const MaxEigData& d) {
  SaddleProblem P = max_eig_problem(d);
  P.solver = nullptr;
  const MonotoneOp A = P.op();
  const BarrierPtr F = P.barrier();
  Vec z(Xk.size() + yk.size());
  z << sym_vec(Xk), yk;
  const Metric H = F->metric(z);
  const SubSolution s = A.solve_linearized(H, F->grad(z), t, 0.0, nullptr, &z);
  const Index N = Xk.size();
  return {sym_mat(s.w.head(N)), s.w.tail(yk.size())};
}

Mat random_density(Index n) {
  const Mat G = testsupport::rand_mat(n, n);
  Mat X = G * G.transpose() + 0.2 * Mat::Identity(n, n);
  return X / X.trace();
}

}  // namespace

TEST(Saddle, ClosedFormMatchesGenericSolve) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const MaxEigData d = gen_max_eigenvalue_data(3, 2, seed);
    const Mat Xk = random_density(3);
    const Vec yk = rand_vec(2, -0.8, 0.8);
    for (double t : {1.0, 0.1, 1e-3}) {
      const auto [Xc, yc] = saddle_closed_form_step(Xk, yk, t, d.C, d.Ls);
      const auto [Xg, yg] = generic_step(Xk, yk, t, d);
      EXPECT_LE((Xc - Xg).norm(), 1e-8 * (1.0 + Xg.norm())) << seed << " t=" << t;
      EXPECT_LE((yc - yg).norm(), 1e-8 * (1.0 + yg.norm())) << seed << " t=" << t;
      EXPECT_NEAR(Xc.trace(), 1.0, 1e-12);
    }
  }
}

TEST(Saddle, DecoupledWhenLIsZero) {
  // L = 0: the y block is the Newton step of the box barrier alone, the X
  // block minimizes <C, X> + t(logdet model) on trace X = 1.
  MaxEigData d = gen_max_eigenvalue_data(3, 2, 9);
  for (auto& Li : d.Ls) Li.setZero();
  const Mat Xk = random_density(3);
  const Vec yk = rand_vec(2, -0.8, 0.8);
  const auto [Xc, yc] = saddle_closed_form_step(Xk, yk, 0.5, d.C, d.Ls);
  const auto box = barrier_box(2);
  const Vec want = yk - box->hessian(yk).ldlt().solve(box->grad(yk));
  EXPECT_LE((yc - want).norm(), 1e-12);
  const auto [Xg, yg] = generic_step(Xk, yk, 0.5, d);
  EXPECT_LE((Xc - Xg).norm(), 1e-10);
}

TEST(Saddle, SolveSmallInstance) {
  const MaxEigData d = gen_max_eigenvalue_data(3, 2, 1);
  const SaddleProblem P = max_eig_problem(d);
  const Schedule s = saddle_schedule(P, 0.95, 0.087, std::nullopt, std::nullopt);
  SolveOptions o;
  o.eps = 1e-5;
  const SaddleResult r = solve_saddle(P, s, o);
  EXPECT_TRUE(r.run.converged);
  EXPECT_NEAR(sym_mat(r.x).trace(), 1.0, 1e-10);
  EXPECT_TRUE(r.y.cwiseAbs().maxCoeff() < 1.0);
  // X is a density matrix and <C + L y, X> approaches lambda_max(C + L y)
  const Mat U = d.lin_op(r.y);
  EXPECT_NEAR(U.cwiseProduct(sym_mat(r.x)).sum(), d.objective(r.y), 1e-3);
  SaddleProblem bad = P;
  bad.x0 = Vec();
  EXPECT_THROW(solve_saddle(bad, s, o), UsageError);
}

TEST(Primal, LineInstance) {
  PrimalProblem P;
  P.g = ProxFn::linear(Vec::Ones(1));
  P.f = barrier_orthant(1);
  P.x0 = Vec::Ones(1);
  const Schedule s = primal_schedule(P, 0.95, 0.087, std::nullopt, std::nullopt);
  SolveOptions o;
  o.eps = 1e-6;
  const PrimalResult r = solve_primal(P, s, o);
  EXPECT_TRUE(r.run.converged);
  EXPECT_NEAR(r.x(0), r.run.t, 0.1 * r.run.t);
  EXPECT_LE(r.objective, 1e-6);
  EXPECT_GT(r.x(0), 0.0);
}

TEST(Primal, SparseLowRankStartIsValid) {
  const PrimalProblem P = gen_sparse_lowrank(6, 2);
  EXPECT_NO_THROW(P.validate());
  EXPECT_TRUE(P.f->in_domain(P.x0));
  PrimalProblem bad = P;
  bad.x0 = -P.x0;
  EXPECT_THROW(bad.validate(), DomainError);
}

namespace {

// max <c, x>  s.t.  x = b + m, x >= 0 (L = I, g the indicator of {m}).
DualConicProblem tiny_lp(const Vec& c, const Vec& b, const Vec& m) {
  DualConicProblem P;
  const Index n = c.size();
  P.c_obj = c;
  P.b = b;
  P.L = Mat::Identity(n, n);
  P.g = ProxFn::point(m);
  P.f = barrier_orthant(n);
  P.cone_center = Vec::Ones(n);
  return P;
}

}  // namespace

TEST(Dual, RecoverPrimalLegendre) {
  const Vec c = rand_vec(3), b = rand_vec(3, 1.0, 2.0), m = rand_vec(3, -0.5, 0.5);
  const DualConicProblem P = tiny_lp(c, b, m);
  const Vec y = c + rand_vec(3, 0.5, 2.0);  // c - y < 0, inside the dual domain
  const double t = 0.3;
  const RecoveredPrimal r = recover_primal(y, t, P);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(r.x(i), t / (y(i) - c(i)), 1e-14);
  // stationarity ||c - y||*_x = ||(c - y) o x|| = t sqrt(3)
  EXPECT_NEAR(r.stationarity, t * std::sqrt(3.0), 1e-12);
  EXPECT_LE(r.central, 1e-12);
  EXPECT_LE((r.s - m).norm(), 1e-15);
  EXPECT_EQ(r.subgradient, 0.0);
  EXPECT_THROW(recover_primal(c - Vec::Ones(3), t, P), DomainError);
  EXPECT_THROW(recover_primal(y, 0.0, P), UsageError);
}

TEST(Dual, TinyLpSolve) {
  const Vec c = rand_vec(3), b = rand_vec(3, 1.0, 2.0), m = rand_vec(3, -0.5, 0.5);
  const DualConicProblem P = tiny_lp(c, b, m);
  const Schedule s = dual_schedule(P, 0.95, 0.087, std::nullopt, std::nullopt);
  EXPECT_DOUBLE_EQ(s.M0, std::sqrt(3.0));
  SolveOptions o;
  o.eps = 1e-7;
  const DualResult r = solve_dual_conic(P, s, o);
  EXPECT_TRUE(r.run.converged);
  EXPECT_LE((r.primal.x - (b + m)).norm(), 1e-5);
  EXPECT_NEAR(r.dual_objective, c.dot(b + m), 1e-5);
  for (const auto& row : r.run.trace.rows) {
    if (row.phase != "2" && row.phase != "fgn") continue;
    EXPECT_LE(row.residual_primary, std::sqrt(3.0) * row.t * (1.0 + 1e-8) + 1e-12);
    EXPECT_LE(row.residual_aux, s.theta * row.t + 1e-9);
  }
}

TEST(Dual, StartSearch) {
  const Vec c = rand_vec(3), b = rand_vec(3, 1.0, 2.0), m = Vec::Zero(3);
  const DualConicProblem P = tiny_lp(c, b, m);
  const Vec y0 = find_dual_start(P);
  EXPECT_TRUE(dual_barrier(P)->in_domain(y0));
}

TEST(Dual, ClusterTightInstanceAtSix) {
  const ClusterData d = gen_cluster_data({3, 3}, 1.0, 0.0, 1);
  const DualConicProblem P = cluster_problem(d);
  const Schedule s = dual_schedule(P, 0.95, 0.087, std::nullopt, std::nullopt);
  SolveOptions o;
  o.eps = 1e-6;
  const DualResult r = solve_dual_conic(P, s, o);
  EXPECT_NEAR(r.dual_objective, 12.0, 1e-4);
  const Mat X = sym_mat(r.primal.x.head(36));
  EXPECT_LE((X - d.X_planted).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Dual, ValidateRejectsRankDeficientMap) {
  DualConicProblem P = tiny_lp(Vec::Ones(2), Vec::Ones(2), Vec::Zero(2));
  P.L.row(1) = P.L.row(0);
  EXPECT_THROW(P.validate(), DomainError);
  P = tiny_lp(Vec::Ones(2), Vec::Ones(2), Vec::Zero(2));
  P.f = barrier_box(2);
  EXPECT_THROW(P.validate(), CapabilityError);
}
