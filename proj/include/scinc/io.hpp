#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scinc/problems.hpp"

namespace scinc {

inline constexpr int kFormatVersion = 1;

// Generic inclusion 0 in A(z) + N_Z(z) with barrier F for Z.
struct Inclusion {
  BarrierPtr F;
  MonotoneOp A;
  Vec z0;
};

// One problem document. kind is "inclusion", "saddle", "primal" or
// "dual_conic"; exactly the matching member is populated. Generated
// problems also carry their spec and raw family data, from which the
// realized problem is rebuilt on load.
struct ProblemFile {
  std::string kind;
  std::optional<ProblemSpec> spec;
  std::optional<MaxEigData> max_eig;
  std::optional<SparseLowRankData> sparse_lowrank;
  std::optional<ClusterData> cluster;
  SaddleProblem saddle;
  PrimalProblem primal;
  DualConicProblem dual;
  Inclusion inclusion;
};

ProblemFile generate_problem(const ProblemSpec& spec);
void validate_problem(const ProblemFile& pf);
Inclusion as_inclusion(const ProblemFile& pf);

std::string problem_to_string(const ProblemFile& pf);
ProblemFile problem_from_string(const std::string& text, const std::string& source = "<string>");
void write_problem(const ProblemFile& pf, const std::string& path);
ProblemFile read_problem(const std::string& path);

struct SolutionFile {
  std::string kind;
  std::string scheme;
  std::string status;  // "converged", "budget", "fixed_t"
  Vec z;
  double t = 0.0;
  double lambda = 0.0;
  double nu = 0.0;
  Schedule schedule;
  Budget budget, budget_running;
  std::int64_t phase1_iters = 0, phase2_iters = 0;
  double zeta_norm0 = 0.0, zeta_norm_max = 0.0;
  std::map<std::string, double> values;  // objective, residuals, ...
  std::optional<Vec> x_recovered, s_recovered;
  std::vector<double> lambda_mid;  // per trace row, -1 where not applicable
};

void write_solution(const SolutionFile& s, const std::string& path);
SolutionFile read_solution(const std::string& path);

// CSV trace with the fixed header; floats use the shortest decimal that
// round-trips.
inline constexpr const char* kTraceHeader =
    "phase,k,t,lambda,delta_target,delta_achieved,sigma,residual_primary,residual_aux,wall_ms";
std::string format_double(double v);
std::string trace_to_csv(const std::vector<TraceRow>& rows);
std::vector<TraceRow> trace_from_csv(const std::string& text, const std::string& source = "<string>");
void write_trace(const std::vector<TraceRow>& rows, const std::string& path);
std::vector<TraceRow> read_trace(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace scinc
