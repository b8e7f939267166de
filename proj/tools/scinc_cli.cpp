// scinc: generate, solve, verify and report on self-concordant inclusion runs.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "scinc/io.hpp"

using namespace scinc;
using nlohmann::json;

namespace {

void set_log_level() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("SCINC_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
  spdlog::set_pattern("[%l] %v");
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::string family;
  Index n = 0, p = 0;
  std::uint64_t seed = 0;
  std::vector<Index> sizes;
  double pin = 0.9, pout = 0.1, rho = 0.2;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  ProblemSpec spec;
  spec.family = parse_family(a.family);
  spec.n = a.n;
  spec.p = a.p;
  spec.seed = a.seed;
  spec.cluster_sizes = a.sizes;
  spec.edge_prob_in = a.pin;
  spec.edge_prob_out = a.pout;
  spec.rho = a.rho;
  if (spec.family == Family::MaxEigenvalue && (spec.n < 1 || spec.p < 1))
    throw UsageError("max_eigenvalue needs --n >= 1 and --p >= 1");
  const ProblemFile pf = generate_problem(spec);
  validate_problem(pf);
  if (a.out.empty() || a.out == "-") std::cout << problem_to_string(pf);
  else write_problem(pf, a.out);
  return 0;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  std::string problem, scheme, out, trace;
  double c = 0.95, beta = 0.0870, eps = 1e-6;
  std::optional<double> eta, t0;
  std::int64_t max_iters = -1;
  std::uint64_t seed = 0;
  bool adaptive_sigma = false, debug_asserts = false;
};

std::string default_scheme(const std::string& kind) {
  if (kind == "saddle") return "saddle";
  if (kind == "primal") return "primal";
  if (kind == "dual_conic") return "dual";
  return "algorithm1";
}

Schedule schedule_for(const ProblemFile& pf, const Inclusion& inc, const SolveArgs& a) {
  if (pf.kind == "dual_conic") return dual_schedule(pf.dual, a.c, a.beta, a.eta, a.t0);
  return make_schedule(inc.F->nu(), inc.F->kappa(), a.c, a.beta, a.eta, a.t0);
}

void fill_run(SolutionFile& sol, const SolveResult& r) {
  sol.z = r.z;
  sol.t = r.t;
  sol.lambda = r.lambda;
  sol.budget = r.budget;
  sol.budget_running = r.budget_running;
  sol.phase1_iters = r.trace.phase1_iters;
  sol.phase2_iters = r.trace.phase2_iters;
  sol.zeta_norm0 = r.trace.zeta_norm0;
  sol.zeta_norm_max = r.trace.zeta_norm_max;
  sol.lambda_mid.clear();
  for (const auto& row : r.trace.rows) sol.lambda_mid.push_back(row.lambda_mid);
}

void add_family_values(const ProblemFile& pf, SolutionFile& sol, const SolveArgs& a) {
  if (pf.kind == "saddle" && sol.z.size() == pf.saddle.n() + pf.saddle.m()) {
    const Vec x = sol.z.head(pf.saddle.n());
    sol.x_recovered = x;
    if (pf.max_eig) sol.values["objective"] = pf.max_eig->objective(sol.z.tail(pf.saddle.m()));
  } else if (pf.kind == "primal") {
    sol.values["objective"] = pf.primal.g.value(sol.z);
  } else if (pf.kind == "dual_conic" && sol.t > 0.0 && sol.z.size() == pf.dual.L.rows()) {
    const RecoveredPrimal r = recover_primal(sol.z, sol.t, pf.dual);
    sol.x_recovered = r.x;
    sol.s_recovered = r.s;
    sol.values["stationarity"] = r.stationarity;
    sol.values["feasibility"] = r.feasibility;
    sol.values["dual_objective"] = ProxFn::conj_plus_linear(pf.dual.g, pf.dual.b).value(sol.z);
    sol.values["primal_objective"] = pf.dual.c_obj.dot(r.x) - pf.dual.g.value(r.s);
  }
  sol.values["eps"] = a.eps;
  sol.values["seed"] = static_cast<double>(a.seed);
}

void write_outputs(const SolveArgs& a, const SolutionFile& sol, const std::vector<TraceRow>& rows) {
  if (!a.trace.empty()) write_trace(rows, a.trace);
  if (!a.out.empty()) write_solution(sol, a.out);
}

int cmd_solve(const SolveArgs& a) {
  const ProblemFile pf = read_problem(a.problem);
  validate_problem(pf);
  const std::string scheme = a.scheme.empty() ? default_scheme(pf.kind) : a.scheme;
  const Inclusion inc = as_inclusion(pf);
  const Schedule sched = schedule_for(pf, inc, a);

  SolveOptions opt;
  opt.eps = a.eps;
  opt.max_iters = a.max_iters;
  opt.adaptive_sigma = a.adaptive_sigma;
  opt.debug_asserts = a.debug_asserts;

  SolutionFile sol;
  sol.kind = pf.kind;
  sol.scheme = scheme;
  sol.schedule = sched;
  sol.nu = inc.F->nu();

  if (scheme == "fgn" || scheme == "dgn") {
    const std::int64_t cap = a.max_iters > 0 ? a.max_iters : 100;
    const FixedTRun run = fixed_t_newton(*inc.F, inc.A, inc.z0, sched.t0, scheme == "dgn", a.eps, cap);
    sol.z = run.z;
    sol.t = sched.t0;
    sol.lambda = run.lambda;
    sol.status = run.converged ? "converged" : "budget";
    sol.phase2_iters = static_cast<std::int64_t>(run.rows.size());
    sol.lambda_mid.assign(run.rows.size(), -1.0);
    add_family_values(pf, sol, a);
    write_outputs(a, sol, run.rows);
    if (!run.converged) {
      spdlog::error("{}: decrement {} above {} after {} steps", scheme, run.lambda, a.eps, cap);
      return exit_code(ErrorKind::Budget);
    }
    return 0;
  }

  try {
    SolveResult r;
    if (scheme == "algorithm1" || scheme == "pfgn") {
      if (scheme == "pfgn") {
        const double lam = newton_decrement(*inc.F, inc.A, inc.z0, sched.t0);
        if (lam > sched.beta)
          throw DomainError("pfgn: start has decrement " + std::to_string(lam) + " > beta; use algorithm1");
        opt.skip_phase1 = true;
      }
      r = algorithm1(*inc.F, inc.A, inc.z0, sched, opt);
    } else if (scheme == "saddle") {
      if (pf.kind != "saddle") throw UsageError("scheme saddle needs a saddle problem");
      r = solve_saddle(pf.saddle, sched, opt).run;
    } else if (scheme == "primal") {
      if (pf.kind != "primal") throw UsageError("scheme primal needs a primal problem");
      r = solve_primal(pf.primal, sched, opt).run;
    } else if (scheme == "dual") {
      if (pf.kind != "dual_conic") throw UsageError("scheme dual needs a dual_conic problem");
      r = solve_dual_conic(pf.dual, sched, opt, &inc.z0).run;
    } else {
      throw UsageError("unknown scheme '" + scheme + "'");
    }
    fill_run(sol, r);
    sol.status = "converged";
    add_family_values(pf, sol, a);
    write_outputs(a, sol, r.trace.rows);
    return 0;
  } catch (const BudgetExceeded& e) {
    fill_run(sol, e.partial);
    sol.status = "budget";
    add_family_values(pf, sol, a);
    write_outputs(a, sol, e.partial.trace.rows);
    throw;
  }
}

// ---------------------------------------------------------------------------
// verify

struct Check {
  std::string name;
  std::int64_t checked = 0;
  std::vector<std::string> failures;
  void test(bool ok, std::size_t row, const std::string& detail) {
    ++checked;
    if (!ok) failures.push_back("row " + std::to_string(row) + ": " + detail);
  }
};

std::string fmt_pair(double lhs, const char* op, double rhs) {
  std::ostringstream s;
  s.precision(10);
  s << lhs << ' ' << op << ' ' << rhs;
  return s.str();
}

int cmd_verify(const std::string& sol_path, const std::string& trace_path, double slack, bool details,
               const std::string& summary_path) {
  const SolutionFile sol = read_solution(sol_path);
  const std::vector<TraceRow> rows = read_trace(trace_path);
  if (!sol.lambda_mid.empty() && sol.lambda_mid.size() != rows.size())
    throw UsageError(sol_path + ": lambda_mid has " + std::to_string(sol.lambda_mid.size()) + " entries, trace has " +
                     std::to_string(rows.size()) + " rows");
  const Schedule& s = sol.schedule;
  const bool dual = sol.kind == "dual_conic";
  const double sqrt_nu = std::sqrt(sol.nu);

  Check nbhd{"lambda_le_beta"}, mid{"intermediate_bound"}, growth{"decrement_growth"}, key{"key_estimate"},
      resid{"central_residual_bound"}, ph1{"phase1_le_eta"}, kbud{"phase2_within_k_max"},
      jbud{"phase1_within_j_max"}, stat{"dual_stationarity"}, feas{"dual_feasibility"}, count{"trace_counts"};

  std::int64_t n1 = 0, n2 = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TraceRow& r = rows[i];
    const double lm = sol.lambda_mid.empty() ? -1.0 : sol.lambda_mid[i];
    const TraceRow* prev = i > 0 ? &rows[i - 1] : nullptr;
    if (r.phase == "1") {
      if (r.k > 0) ++n1;
      ph1.test(r.lambda <= s.eta + slack, i, fmt_pair(r.lambda, "<=", s.eta));
    } else if (r.phase == "damped") {
      if (r.k > 0) ++n1;
    } else if (r.phase == "2") {
      if (r.k > 0) ++n2;
      nbhd.test(r.lambda <= s.beta + slack, i, fmt_pair(r.lambda, "<=", s.beta));
      if (lm >= 0.0) {
        const double ib = intermediate_bound(s.c, s.beta);
        mid.test(lm <= ib + slack, i, fmt_pair(lm, "<=", ib));
        key.test(r.lambda <= key_estimate_rhs(lm, r.delta_achieved) + slack, i,
                 fmt_pair(r.lambda, "<=", key_estimate_rhs(lm, r.delta_achieved)));
        if (prev && prev->phase == "2") {
          const double g = prev->lambda + r.sigma / (1.0 - r.sigma) * (sqrt_nu + prev->lambda);
          growth.test(lm <= g + slack, i, fmt_pair(lm, "<=", g));
        }
      }
      if (!dual && r.k > 0) resid.test(r.residual_primary <= r.residual_aux + slack, i,
                            fmt_pair(r.residual_primary, "<=", r.residual_aux));
    } else if (r.phase == "fgn") {
      if (prev && prev->phase == "fgn" && prev->t == r.t)
        key.test(r.lambda <= key_estimate_rhs(prev->lambda, prev->delta_achieved) + slack, i,
                 fmt_pair(r.lambda, "<=", key_estimate_rhs(prev->lambda, prev->delta_achieved)));
    }
    if (dual && (r.phase == "2" || r.phase == "fgn")) {
      stat.test(r.residual_primary <= sqrt_nu * r.t + slack, i, fmt_pair(r.residual_primary, "<=", sqrt_nu * r.t));
      feas.test(r.residual_aux <= s.theta * r.t + slack, i, fmt_pair(r.residual_aux, "<=", s.theta * r.t));
    }
  }
  const bool path_scheme = sol.scheme != "fgn" && sol.scheme != "dgn";
  if (path_scheme) {
    count.test(n2 == sol.phase2_iters && n1 == sol.phase1_iters, 0,
               "trace has " + std::to_string(n1) + "/" + std::to_string(n2) + " phase rows, solution says " +
                   std::to_string(sol.phase1_iters) + "/" + std::to_string(sol.phase2_iters));
    if (sol.budget.k_max > 0)
      kbud.test(sol.phase2_iters <= sol.budget.k_max, 0,
                fmt_pair(static_cast<double>(sol.phase2_iters), "<=", static_cast<double>(sol.budget.k_max)));
    if (sol.budget.j_max > 0 && sol.phase1_iters > 0)
      jbud.test(sol.phase1_iters <= sol.budget.j_max, 0,
                fmt_pair(static_cast<double>(sol.phase1_iters), "<=", static_cast<double>(sol.budget.j_max)));
  }

  const std::vector<const Check*> all{&nbhd, &mid, &growth, &key, &resid, &ph1, &kbud, &jbud, &stat, &feas, &count};
  bool ok = true;
  json summary = json::object();
  for (const Check* c : all) {
    if (c->checked == 0) continue;
    const bool pass = c->failures.empty();
    ok = ok && pass;
    std::printf("%s %s %lld/%lld\n", pass ? "PASS" : "FAIL", c->name.c_str(),
                static_cast<long long>(c->checked - static_cast<std::int64_t>(c->failures.size())),
                static_cast<long long>(c->checked));
    if (details)
      for (const auto& f : c->failures) std::printf("  %s\n", f.c_str());
    summary[c->name] = json{{"checked", c->checked}, {"failed", c->failures.size()}, {"failures", c->failures}};
  }
  summary["ok"] = ok;
  summary["slack"] = slack;
  if (!summary_path.empty()) write_text(summary_path, summary.dump(2) + "\n");
  std::printf("%s\n", ok ? "verify: ok" : "verify: FAILED");
  return ok ? 0 : 3;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const std::vector<std::string>& traces, const std::vector<std::string>& solutions,
               const std::string& fig1, double fig1_c, double fig1_nu) {
  if (!solutions.empty() && solutions.size() != traces.size())
    throw UsageError("report: --solutions must list one file per trace");
  std::printf("%-32s %8s %8s %8s %14s %12s %12s %16s %8s %6s\n", "trace", "phase1", "phase2", "fixed", "final_t",
              "final_lam", "time_ms", "objective", "k_max", "ok");
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto rows = read_trace(traces[i]);
    std::int64_t p1 = 0, p2 = 0, fx = 0;
    double ms = 0.0;
    for (const auto& r : rows) {
      if ((r.phase == "1" || r.phase == "damped") && r.k > 0) ++p1;
      else if (r.phase == "2" && r.k > 0) ++p2;
      else if (r.phase == "fgn" || r.phase == "dgn") ++fx;
      ms += r.wall_ms;
    }
    const double ft = rows.empty() ? 0.0 : rows.back().t;
    const double fl = rows.empty() ? 0.0 : rows.back().lambda;
    std::string obj = "-", kmax = "-", flag = "-";
    if (!solutions.empty()) {
      const SolutionFile sol = read_solution(solutions[i]);
      for (const char* key : {"objective", "dual_objective"})
        if (auto it = sol.values.find(key); it != sol.values.end()) {
          obj = format_double(it->second);
          break;
        }
      if (sol.budget.k_max > 0) {
        kmax = std::to_string(sol.budget.k_max);
        flag = p2 <= sol.budget.k_max ? "yes" : "no";
      }
    }
    std::printf("%-32s %8lld %8lld %8lld %14.6e %12.4e %12.1f %16s %8s %6s\n", traces[i].c_str(),
                static_cast<long long>(p1), static_cast<long long>(p2), static_cast<long long>(fx), ft, fl, ms,
                obj.c_str(), kmax.c_str(), flag.c_str());
  }
  if (!fig1.empty()) {
    std::ostringstream out;
    out << "beta,delta_t_bar,sigma_bar\n";
    const double hi = beta_upper(fig1_c);
    for (int i = 1; i < 400; ++i) {
      const double b = hi * i / 400.0;
      out << format_double(b) << ',' << format_double(delta_t_bar(fig1_c, b)) << ','
          << format_double(sigma_bar(fig1_c, b, fig1_nu)) << '\n';
    }
    write_text(fig1, out.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  set_log_level();
  CLI::App app{"scinc: path-following for self-concordant inclusions"};
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Generate a random problem file");
  gen->add_option("--family", ga.family, "max_eigenvalue | sparse_lowrank | cluster_recovery")->required();
  gen->add_option("--n", ga.n, "Matrix order");
  gen->add_option("--p", ga.p, "Number of coupling matrices (max_eigenvalue)");
  gen->add_option("--seed", ga.seed, "RNG seed");
  gen->add_option("--sizes", ga.sizes, "Cluster sizes (cluster_recovery)");
  gen->add_option("--edge-prob-in", ga.pin, "Within-cluster edge probability");
  gen->add_option("--edge-prob-out", ga.pout, "Between-cluster edge probability");
  gen->add_option("--rho", ga.rho, "l1 weight (sparse_lowrank)");
  gen->add_option("-o,--out", ga.out, "Output file (default stdout)");

  SolveArgs sa;
  auto* sol = app.add_subcommand("solve", "Solve a problem file");
  sol->add_option("problem", sa.problem, "Problem file")->required();
  sol->add_option("--scheme", sa.scheme, "fgn | dgn | pfgn | algorithm1 | saddle | primal | dual");
  sol->add_option("--c", sa.c, "Neighborhood constant c in (0, 1)");
  sol->add_option("--beta", sa.beta, "Path neighborhood radius");
  sol->add_option("--eta", sa.eta, "Phase-one neighborhood radius");
  sol->add_option("--t0", sa.t0, "Initial penalty parameter (fixed t for fgn/dgn)");
  sol->add_option("--eps", sa.eps, "Termination tolerance");
  sol->add_option("--max-iters", sa.max_iters, "Iteration cap");
  sol->add_option("--seed", sa.seed, "Recorded in the solution file");
  sol->add_option("--trace", sa.trace, "CSV trace output");
  sol->add_option("-o,--out", sa.out, "Solution file output");
  sol->add_flag("--adaptive-sigma", sa.adaptive_sigma, "Use the gradient-based step factor");
  sol->add_flag("--debug-asserts", sa.debug_asserts, "Warn when a theoretical bound is violated");

  std::string v_sol, v_trace, v_summary;
  double v_slack = 1e-6;
  bool v_details = false;
  auto* ver = app.add_subcommand("verify", "Replay the convergence inequalities on a finished run");
  ver->add_option("solution", v_sol, "Solution file")->required();
  ver->add_option("trace", v_trace, "Trace CSV")->required();
  ver->add_option("--slack", v_slack, "Additive slack");
  ver->add_option("--summary", v_summary, "Write a JSON summary here");
  ver->add_flag("--details", v_details, "List every failing row");

  std::vector<std::string> r_traces, r_solutions;
  std::string r_fig1;
  double r_c = 0.95, r_nu = 1000.0;
  auto* rep = app.add_subcommand("report", "Summarize traces");
  rep->add_option("traces", r_traces, "Trace CSV files");
  rep->add_option("--solutions", r_solutions, "Solution files, one per trace");
  rep->add_option("--fig1", r_fig1, "Write (beta, delta_t_bar, sigma_bar) CSV here");
  rep->add_option("--c", r_c, "c for --fig1");
  rep->add_option("--nu", r_nu, "nu for --fig1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(ga);
    if (*sol) return cmd_solve(sa);
    if (*ver) return cmd_verify(v_sol, v_trace, v_slack, v_details, v_summary);
    if (*rep) return cmd_report(r_traces, r_solutions, r_fig1, r_c, r_nu);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    if (e.kind() == ErrorKind::Usage) std::cerr << app.help();
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 3;
  }
  return 0;
}
