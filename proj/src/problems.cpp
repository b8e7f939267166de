#include "scinc/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace scinc {

// ---------------------------------------------------------------------------
// RNG

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

Mat gaussian_sym(Rng& rng, Index n) {
  Mat G(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) G(i, j) = rng.gaussian();
  return 0.5 * (G + G.transpose());
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& w : s_) w = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::string family_name(Family f) {
  switch (f) {
    case Family::MaxEigenvalue: return "max_eigenvalue";
    case Family::SparseLowRank: return "sparse_lowrank";
    case Family::ClusterRecovery: return "cluster_recovery";
  }
  return "?";
}

Family parse_family(const std::string& s) {
  if (s == "max_eigenvalue") return Family::MaxEigenvalue;
  if (s == "sparse_lowrank") return Family::SparseLowRank;
  if (s == "cluster_recovery") return Family::ClusterRecovery;
  throw UsageError("unknown problem family '" + s + "' (expected max_eigenvalue, sparse_lowrank or cluster_recovery)");
}

// ---------------------------------------------------------------------------
// max eigenvalue

Mat MaxEigData::Leig() const {
  const Index n = C.rows();
  Mat out(n * n, static_cast<Index>(Ls.size()));
  for (size_t i = 0; i < Ls.size(); ++i) out.col(static_cast<Index>(i)) = sym_vec(Ls[i]);
  return out;
}

Mat MaxEigData::lin_op(const Vec& y) const {
  require_dim(y.size(), static_cast<Index>(Ls.size()), "MaxEigData::lin_op");
  Mat U = C;
  for (size_t i = 0; i < Ls.size(); ++i) U += y(static_cast<Index>(i)) * Ls[i];
  return U;
}

double MaxEigData::objective(const Vec& y) const {
  Eigen::SelfAdjointEigenSolver<Mat> es(lin_op(y), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

MaxEigData gen_max_eigenvalue_data(Index n, Index p, std::uint64_t seed) {
  if (n < 1 || p < 1) throw UsageError("gen_max_eigenvalue: need n >= 1 and p >= 1");
  Rng rng(seed);
  MaxEigData d;
  d.C = gaussian_sym(rng, n);
  d.Ls.reserve(static_cast<size_t>(p));
  for (Index i = 0; i < p; ++i) d.Ls.push_back(gaussian_sym(rng, n));
  return d;
}

SaddleProblem max_eig_problem(const MaxEigData& d) {
  const Index n = d.C.rows();
  const Index p = static_cast<Index>(d.Ls.size());
  SaddleProblem P;
  P.g = ProxFn::affine(sym_vec(Mat::Identity(n, n)).transpose(), Vec::Ones(1), -sym_vec(d.C));
  P.psi = ProxFn::zero(p);
  P.f = barrier_logdet(n);
  P.phi = barrier_box(p);
  P.L = d.Leig().transpose();
  P.solver = saddle_affine_subsolver(n * n);
  P.x0 = sym_vec(Mat::Identity(n, n) / static_cast<double>(n));
  P.y0 = Vec::Zero(p);
  return P;
}

SaddleProblem gen_max_eigenvalue(Index n, Index p, std::uint64_t seed) {
  return max_eig_problem(gen_max_eigenvalue_data(n, p, seed));
}

void validate_max_eig(const MaxEigData& d) {
  const Index n = d.C.rows();
  if (n < 1 || d.C.cols() != n) throw UsageError("max_eigenvalue: C must be square");
  if (d.Ls.empty()) throw UsageError("max_eigenvalue: need at least one L_i");
  for (const auto& Li : d.Ls)
    if (Li.rows() != n || Li.cols() != n) throw UsageError("max_eigenvalue: L_i size mismatch");
  if ((d.C - d.C.transpose()).cwiseAbs().maxCoeff() > 0.0) throw UsageError("max_eigenvalue: C not symmetric");
  max_eig_problem(d).validate();
}

// ---------------------------------------------------------------------------
// sparse + low rank

double SparseLowRankData::objective(const Mat& X) const {
  const Index n = M.rows();
  double v = 0.0;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      if (i != j && (X(i, j) < lower || X(i, j) > upper)) return std::numeric_limits<double>::infinity();
      v += rho * std::abs(X(i, j) - M(i, j));
    }
  return v + (1.0 - rho) * X.trace();
}

SparseLowRankData gen_sparse_lowrank_data(const ProblemSpec& spec) {
  const Index n = spec.n;
  if (n < 2) throw UsageError("gen_sparse_lowrank: need n >= 2");
  if (!(spec.rho > 0.0 && spec.rho < 1.0)) throw UsageError("gen_sparse_lowrank: rho must lie in (0, 1)");
  Rng rng(spec.seed);
  const Index r = static_cast<Index>(std::floor(spec.rank_fraction * static_cast<double>(n)));

  // Support S x S with |S| = round(sqrt(sparsity) n) gives the requested
  // fraction of nonzeros; M0 = U D U^T with U supported on S has rank r.
  Index m = static_cast<Index>(std::llround(std::sqrt(spec.sparsity) * static_cast<double>(n)));
  m = std::clamp<Index>(m, std::max<Index>(r, 1), n);
  std::vector<Index> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
  }
  Mat U = Mat::Zero(n, r);
  for (Index k = 0; k < m; ++k)
    for (Index c = 0; c < r; ++c) U(perm[static_cast<size_t>(k)], c) = rng.gaussian();
  Vec D(r);
  for (Index c = 0; c < r; ++c) D(c) = rng.uniform() < 0.5 ? -1.0 : 1.0;

  SparseLowRankData d;
  d.rho = spec.rho;
  d.M0 = U * D.asDiagonal() * U.transpose();
  Mat E = Mat::Zero(n, n);
  const double sd = std::sqrt(spec.noise_variance);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i)
      if (rng.uniform() < spec.noise_density) E(i, j) = E(j, i) = sd * rng.gaussian();
  d.M = d.M0 + E;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Index j = 1; j < n; ++j)
    for (Index i = 0; i < j; ++i) {
      lo = std::min(lo, d.M(i, j));
      hi = std::max(hi, d.M(i, j));
    }
  d.lower = 0.9 * lo;
  d.upper = 1.1 * hi;
  if (d.lower > d.upper) std::swap(d.lower, d.upper);  // both extremes share a sign
  return d;
}

namespace {

// A strictly feasible, diagonally dominant start with off-diagonals at the
// box midpoint.
Mat sparse_lowrank_start(const SparseLowRankData& d) {
  const Index n = d.M.rows();
  const double mid = 0.5 * (d.lower + d.upper);
  return mid * (Mat::Ones(n, n) - Mat::Identity(n, n)) +
         (std::abs(mid) * static_cast<double>(n - 1) + 1.0) * Mat::Identity(n, n);
}

}  // namespace

PrimalProblem sparse_lowrank_problem(const SparseLowRankData& d) {
  const Index n = d.M.rows();
  const Index N = n * n;
  const double inf = std::numeric_limits<double>::infinity();
  Separable s{Vec::Constant(N, d.rho), sym_vec(d.M), Vec::Zero(N), Vec::Constant(N, d.lower),
              Vec::Constant(N, d.upper)};
  for (Index i = 0; i < n; ++i) {
    const Index k = i + i * n;
    s.lin(k) = 1.0 - d.rho;
    s.lo(k) = -inf;
    s.hi(k) = inf;
  }
  PrimalProblem P;
  P.g = ProxFn(std::move(s));
  P.f = barrier_logdet(n);
  P.x0 = sym_vec(sparse_lowrank_start(d));
  return P;
}

PrimalProblem gen_sparse_lowrank(Index n, std::uint64_t seed) {
  ProblemSpec spec;
  spec.family = Family::SparseLowRank;
  spec.n = n;
  spec.seed = seed;
  return sparse_lowrank_problem(gen_sparse_lowrank_data(spec));
}

void validate_sparse_lowrank(const SparseLowRankData& d) {
  const Index n = d.M.rows();
  if (n < 2 || d.M.cols() != n) throw UsageError("sparse_lowrank: M must be square with n >= 2");
  if (!(d.lower <= d.upper)) throw UsageError("sparse_lowrank: lower bound exceeds upper bound");
  const PrimalProblem P = sparse_lowrank_problem(d);
  P.validate();
  if (!std::isfinite(P.g.value(P.x0))) throw DomainError("sparse_lowrank: g is not finite at the start point");
}

// ---------------------------------------------------------------------------
// cluster recovery

ClusterData gen_cluster_data(const std::vector<Index>& sizes, double p_in, double p_out, std::uint64_t seed) {
  if (sizes.size() < 2) throw UsageError("gen_cluster_recovery: need at least two clusters");
  for (Index k : sizes)
    if (k < 2) throw UsageError("gen_cluster_recovery: cluster sizes must be >= 2");
  if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0))
    throw UsageError("gen_cluster_recovery: edge probabilities must lie in [0, 1]");
  ClusterData d;
  d.sizes = sizes;
  for (size_t c = 0; c < sizes.size(); ++c)
    for (Index k = 0; k < sizes[c]; ++k) d.labels.push_back(static_cast<Index>(c));
  const Index n = static_cast<Index>(d.labels.size());
  Rng rng(seed);
  d.A = Mat::Zero(n, n);
  for (Index j = 1; j < n; ++j)
    for (Index i = 0; i < j; ++i) {
      const bool same = d.labels[static_cast<size_t>(i)] == d.labels[static_cast<size_t>(j)];
      if (rng.uniform() < (same ? p_in : p_out)) d.A(i, j) = d.A(j, i) = 1.0;
    }
  d.X_planted = Mat::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (d.labels[static_cast<size_t>(i)] == d.labels[static_cast<size_t>(j)]) d.X_planted(i, j) = 1.0;
  for (Index k : sizes) {
    d.s1 += static_cast<double>(k);
    d.s2 += static_cast<double>(k * k);
  }
  return d;
}

DualConicProblem cluster_problem(const ClusterData& d) {
  const Index n = d.A.rows();
  const Index N = n * n;
  const Index m = n * (n - 1) / 2;
  const Index p = n + 1 + m;
  DualConicProblem P;
  P.L = Mat::Zero(p, N + m);
  P.b = Vec::Zero(p);
  for (Index i = 0; i < n; ++i) {
    P.L(i, i + i * n) = 1.0;
    P.b(i) = 1.0;
  }
  P.L.row(n).head(N).setOnes();
  P.b(n) = d.s2;
  Index r = n + 1, w = 0;
  for (Index j = 1; j < n; ++j)
    for (Index i = 0; i < j; ++i, ++r, ++w) {
      P.L(r, i + j * n) = 0.5;
      P.L(r, j + i * n) = 0.5;
      P.L(r, N + w) = -1.0;
    }
  P.c_obj = Vec::Zero(N + m);
  P.c_obj.head(N) = sym_vec(d.A);
  P.g = ProxFn::point(Vec::Zero(p));
  P.f = barrier_sum(barrier_logdet(n), barrier_orthant(m));
  P.cone_center = Vec::Ones(N + m);
  P.cone_center.head(N) = sym_vec(Mat::Identity(n, n));
  return P;
}

DualConicProblem gen_cluster_recovery(const std::vector<Index>& sizes, double p_in, double p_out,
                                      std::uint64_t seed) {
  return cluster_problem(gen_cluster_data(sizes, p_in, p_out, seed));
}

Index stacked_cluster_codomain(Index n) { return n * (n + 1) + 2; }

Mat stacked_cluster_map(Index n) {
  const Index N = n * n;
  Mat L = Mat::Zero(stacked_cluster_codomain(n), N);
  for (Index i = 0; i < n; ++i) L(0, i + i * n) = 1.0;
  L.row(1).setOnes();
  for (Index i = 0; i < n; ++i) L(2 + i, i + i * n) = 1.0;
  for (Index k = 0; k < N; ++k) L(2 + n + k, k) = 1.0;
  return L;
}

void validate_cluster(const ClusterData& d) {
  const Index n = d.A.rows();
  if (d.A.cols() != n || static_cast<Index>(d.labels.size()) != n)
    throw UsageError("cluster_recovery: adjacency and labels disagree");
  if ((d.A - d.A.transpose()).cwiseAbs().maxCoeff() > 0.0) throw UsageError("cluster_recovery: A not symmetric");
  cluster_problem(d).validate();
}

}  // namespace scinc
