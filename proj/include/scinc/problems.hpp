#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scinc/instances.hpp"

namespace scinc {

// xoshiro256** (Blackman and Vigna), state seeded by four successive
// splitmix64 outputs. Gaussians come from Box-Muller on pairs of uniforms
// in (0, 1]; the second value of each pair is cached.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64();
  double uniform();  // in [0, 1), 53 random bits
  double gaussian();

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

enum class Family { MaxEigenvalue, SparseLowRank, ClusterRecovery };

std::string family_name(Family f);
Family parse_family(const std::string& s);  // UsageError on unknown names

struct ProblemSpec {
  Family family = Family::MaxEigenvalue;
  Index n = 0;
  Index p = 0;  // max_eigenvalue only
  std::uint64_t seed = 0;
  // sparse_lowrank
  double rho = 0.2;
  double rank_fraction = 0.25;
  double sparsity = 0.25;
  double noise_variance = 1e-4;
  double noise_density = 0.10;
  // cluster_recovery
  std::vector<Index> cluster_sizes;
  double edge_prob_in = 0.9;
  double edge_prob_out = 0.1;
};

struct MaxEigData {
  Mat C;
  std::vector<Mat> Ls;
  Mat Leig() const;  // n^2 x p, columns vec(L_i)
  Mat lin_op(const Vec& y) const;  // C + sum y_i L_i
  double objective(const Vec& y) const;  // lambda_max(C + L y)
};

struct SparseLowRankData {
  Mat M0, M;
  double rho = 0.2;
  double lower = 0.0, upper = 0.0;
  double objective(const Mat& X) const;  // +inf outside the box
};

struct ClusterData {
  Mat A;
  std::vector<Index> sizes;
  std::vector<Index> labels;
  Mat X_planted;
  double s1 = 0.0, s2 = 0.0;
};

SaddleProblem max_eig_problem(const MaxEigData& d);
PrimalProblem sparse_lowrank_problem(const SparseLowRankData& d);
DualConicProblem cluster_problem(const ClusterData& d);

MaxEigData gen_max_eigenvalue_data(Index n, Index p, std::uint64_t seed);
SparseLowRankData gen_sparse_lowrank_data(const ProblemSpec& spec);
ClusterData gen_cluster_data(const std::vector<Index>& sizes, double p_in, double p_out, std::uint64_t seed);

SaddleProblem gen_max_eigenvalue(Index n, Index p, std::uint64_t seed);
PrimalProblem gen_sparse_lowrank(Index n, std::uint64_t seed);
DualConicProblem gen_cluster_recovery(const std::vector<Index>& sizes, double p_in, double p_out,
                                      std::uint64_t seed);

// Codomain size n(n+1)+2 of the stacked map [trace X, <E, X>, X_ii, X_ij]
// used by the textbook statement. That map has more rows than vec X has
// entries, so it cannot be full row rank; gen_cluster_recovery uses the
// equality form with slack variables w_ij instead.
Index stacked_cluster_codomain(Index n);
Mat stacked_cluster_map(Index n);

// Validators: dimensions, strict interiority of the shipped start, finiteness
// of g there. Throw on failure.
void validate_max_eig(const MaxEigData& d);
void validate_sparse_lowrank(const SparseLowRankData& d);
void validate_cluster(const ClusterData& d);

}  // namespace scinc
