#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "scinc/problems.hpp"

using namespace scinc;

TEST_CASE("rng is deterministic and in range") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    differs |= u != c.uniform();
  }
  CHECK(differs);
  Rng g(7);
  double s = 0.0, s2 = 0.0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const double x = g.gaussian();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / N) < 0.01);
  CHECK(std::abs(s2 / N - 1.0) < 0.02);
}

TEST_CASE("family names") {
  for (Family f : {Family::MaxEigenvalue, Family::SparseLowRank, Family::ClusterRecovery})
    CHECK(parse_family(family_name(f)) == f);
  CHECK_THROWS_AS(parse_family("bogus"), UsageError);
}

TEST_CASE("max eigenvalue generator") {
  const MaxEigData a = gen_max_eigenvalue_data(4, 3, 11), b = gen_max_eigenvalue_data(4, 3, 11);
  CHECK(a.C == b.C);
  CHECK(a.Ls.size() == 3);
  for (size_t i = 0; i < 3; ++i) CHECK(a.Ls[i] == b.Ls[i]);
  CHECK(a.C != gen_max_eigenvalue_data(4, 3, 12).C);
  CHECK((a.C - a.C.transpose()).norm() == 0.0);

  const SaddleProblem P = max_eig_problem(a);
  CHECK(P.nu() == doctest::Approx(4.0 + 2.0 * 3.0));
  CHECK(P.n() == 16);
  CHECK(P.m() == 3);
  CHECK_NOTHROW(validate_max_eig(a));
  // the objective is lambda_max of C + sum y_i L_i
  Eigen::Vector3d y(0.3, -0.2, 0.5);
  Mat U = a.C + 0.3 * a.Ls[0] - 0.2 * a.Ls[1] + 0.5 * a.Ls[2];
  Eigen::SelfAdjointEigenSolver<Mat> es(U);
  CHECK(a.objective(y) == doctest::Approx(es.eigenvalues().maxCoeff()));
  CHECK_THROWS_AS(gen_max_eigenvalue_data(0, 2, 1), UsageError);
}

TEST_CASE("sparse plus low rank generator") {
  for (Index n : {8, 12, 20}) {
    ProblemSpec spec;
    spec.family = Family::SparseLowRank;
    spec.n = n;
    spec.seed = 3;
    const SparseLowRankData d = gen_sparse_lowrank_data(spec);
    const SparseLowRankData e = gen_sparse_lowrank_data(spec);
    CHECK(d.M == e.M);
    Eigen::FullPivLU<Mat> lu(d.M0);
    lu.setThreshold(1e-10);
    CHECK(lu.rank() == n / 4);
    CHECK(d.lower <= d.upper);
    CHECK((d.M - d.M.transpose()).norm() == 0.0);
    CHECK_NOTHROW(validate_sparse_lowrank(d));
    const PrimalProblem P = sparse_lowrank_problem(d);
    CHECK(P.f->nu() == doctest::Approx(static_cast<double>(n)));
    CHECK(std::isfinite(P.g.value(P.x0)));
    CHECK(std::isfinite(d.objective(sym_mat(P.x0))));
    CHECK(d.objective(sym_mat(P.x0)) == doctest::Approx(P.g.value(P.x0)));
  }
  ProblemSpec bad;
  bad.n = 1;
  CHECK_THROWS_AS(gen_sparse_lowrank_data(bad), UsageError);
}

TEST_CASE("cluster generator and equality form") {
  const ClusterData d = gen_cluster_data({3, 4}, 0.9, 0.1, 5);
  const Index n = 7;
  CHECK(d.A.rows() == n);
  CHECK(d.labels.size() == 7);
  CHECK(d.s1 == 7.0);
  CHECK(d.s2 == 25.0);
  CHECK(d.A == gen_cluster_data({3, 4}, 0.9, 0.1, 5).A);
  CHECK(d.A.diagonal().norm() == 0.0);

  // planted X: unit diagonal, 0/1 entries, PSD, sum s2
  const Mat& X = d.X_planted;
  CHECK(X.diagonal() == Vec::Ones(n));
  CHECK(X.sum() == 25.0);
  Eigen::SelfAdjointEigenSolver<Mat> es(X);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);

  const DualConicProblem P = cluster_problem(d);
  const Index m = n * (n - 1) / 2;
  CHECK(P.L.rows() == n + 1 + m);
  CHECK(P.L.cols() == n * n + m);
  Vec xw(n * n + m);
  xw.head(n * n) = sym_vec(X);
  Index k = n * n;
  for (Index j = 1; j < n; ++j)
    for (Index i = 0; i < j; ++i) xw(k++) = X(i, j);
  CHECK((P.L * xw - P.b).norm() == doctest::Approx(0.0));
  CHECK(P.c_obj.dot(xw) == doctest::Approx((d.A.cwiseProduct(X)).sum()));
  CHECK_NOTHROW(validate_cluster(d));
  CHECK(dual_barrier(P)->nu() == doctest::Approx(static_cast<double>(n + m)));

  CHECK(stacked_cluster_codomain(n) == n * (n + 1) + 2);
  CHECK(stacked_cluster_map(n).rows() == stacked_cluster_codomain(n));
  CHECK(stacked_cluster_map(n).cols() == n * n);

  CHECK_THROWS_AS(gen_cluster_data({3}, 0.9, 0.1, 1), UsageError);
  CHECK_THROWS_AS(gen_cluster_data({3, 1}, 0.9, 0.1, 1), UsageError);
  CHECK_THROWS_AS(gen_cluster_data({3, 3}, 1.5, 0.1, 1), UsageError);
}

TEST_CASE("planted partition beats every other split at n = 6") {
  const ClusterData d = gen_cluster_data({3, 3}, 1.0, 0.0, 1);
  const double planted = d.A.cwiseProduct(d.X_planted).sum();
  CHECK(planted == 12.0);
  double best = -1.0;
  int count = 0;
  for (int mask = 0; mask < 64; ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != 3) continue;
    Mat X(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) X(i, j) = (((mask >> i) & 1) == ((mask >> j) & 1)) ? 1.0 : 0.0;
    const double v = d.A.cwiseProduct(X).sum();
    best = std::max(best, v);
    if (v == planted) ++count;
  }
  CHECK(best == planted);
  CHECK(count == 2);  // the split and its label swap
}
