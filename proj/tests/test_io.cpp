#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "scinc/io.hpp"
#include "support.hpp"

using namespace scinc;

namespace {

std::string expect_usage_error(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const UsageError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no UsageError raised";
  return {};
}

ProblemFile generated(Family f) {
  ProblemSpec s;
  s.family = f;
  s.seed = 4;
  s.n = f == Family::MaxEigenvalue ? 3 : 6;
  s.p = 2;
  return generate_problem(s);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("scinc_test_io_" + name);
}

}  // namespace

TEST(Io, GeneratedProblemsRoundTrip) {
  for (Family f : {Family::MaxEigenvalue, Family::SparseLowRank, Family::ClusterRecovery}) {
    const ProblemFile pf = generated(f);
    EXPECT_NO_THROW(validate_problem(pf));
    const std::string text = problem_to_string(pf);
    const ProblemFile back = problem_from_string(text);
    EXPECT_EQ(back.kind, pf.kind);
    EXPECT_EQ(problem_to_string(back), text) << family_name(f);
  }
  const ProblemFile me = problem_from_string(problem_to_string(generated(Family::MaxEigenvalue)));
  EXPECT_TRUE(static_cast<bool>(me.saddle.solver));
  EXPECT_EQ(me.max_eig->C, generated(Family::MaxEigenvalue).max_eig->C);
}

TEST(Io, InclusionRoundTrip) {
  ProblemFile pf;
  pf.kind = "inclusion";
  pf.inclusion.F = barrier_orthant(2);
  pf.inclusion.A = subdiff_operator(ProxFn::l1(2, 0.5));
  pf.inclusion.A.a = testsupport::rand_vec(2);
  pf.inclusion.z0 = Vec::Ones(2);
  const std::string text = problem_to_string(pf);
  const ProblemFile back = problem_from_string(text);
  EXPECT_EQ(back.kind, "inclusion");
  EXPECT_EQ(back.inclusion.A.a, pf.inclusion.A.a);
  EXPECT_EQ(problem_to_string(back), text);
  const Inclusion inc = as_inclusion(back);
  EXPECT_EQ(inc.F->nu(), 2.0);
}

TEST(Io, ProblemFileErrors) {
  EXPECT_NE(expect_usage_error([] { problem_from_string("{not json", "p.json"); }).find("p.json"), std::string::npos);
  EXPECT_NE(expect_usage_error([] { problem_from_string(R"({"kind":"primal"})", "p.json"); }).find("format_version"),
            std::string::npos);
  EXPECT_NE(expect_usage_error([] { problem_from_string(R"({"format_version":99,"kind":"primal"})", "p.json"); })
                .find("99"),
            std::string::npos);
  std::string text = problem_to_string(generated(Family::SparseLowRank));
  const auto pos = text.find("\"rho\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 5, "\"rhox\"");
  EXPECT_THROW(problem_from_string(text), UsageError);
  EXPECT_THROW(read_problem("/nonexistent/dir/p.json"), UsageError);
}

TEST(Io, TraceRoundTripIsExact) {
  std::vector<TraceRow> rows;
  for (int i = 0; i < 20; ++i) {
    TraceRow r;
    r.phase = i % 3 == 0 ? "1" : (i % 3 == 1 ? "2" : "fgn");
    r.k = i;
    r.t = std::exp(testsupport::unif(-30, 2));
    r.lambda = testsupport::unif(0, 0.1);
    r.delta_target = 1.0 / 3.0;
    r.delta_achieved = 1e-300 * testsupport::unif(1, 2);
    r.sigma = 0.1;
    r.residual_primary = std::numeric_limits<double>::quiet_NaN();
    r.residual_aux = std::numeric_limits<double>::infinity();
    r.wall_ms = testsupport::unif(0, 100);
    rows.push_back(r);
  }
  const std::string csv = trace_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kTraceHeader);
  const auto back = trace_from_csv(csv);
  ASSERT_EQ(back.size(), rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].phase, rows[i].phase);
    EXPECT_EQ(back[i].k, rows[i].k);
    EXPECT_EQ(back[i].t, rows[i].t);
    EXPECT_EQ(back[i].lambda, rows[i].lambda);
    EXPECT_EQ(back[i].delta_target, rows[i].delta_target);
    EXPECT_EQ(back[i].delta_achieved, rows[i].delta_achieved);
    EXPECT_TRUE(std::isnan(back[i].residual_primary));
    EXPECT_TRUE(std::isinf(back[i].residual_aux));
    EXPECT_EQ(back[i].wall_ms, rows[i].wall_ms);
  }
  EXPECT_EQ(trace_to_csv(back), csv);
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-300), "1e-300");
}

TEST(Io, TraceParseErrorsNameLineAndField) {
  const std::string head = std::string(kTraceHeader) + "\n";
  const std::string good = "2,1,0.5,0.01,1e-3,1e-4,0.1,1,2,0.3\n";
  std::string msg = expect_usage_error([&] { trace_from_csv(head + good + "2,2,0.4,abc,1,1,1,1,1,1\n", "tr.csv"); });
  EXPECT_NE(msg.find("tr.csv:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("lambda"), std::string::npos) << msg;
  msg = expect_usage_error([&] { trace_from_csv(head + "2,1,0.5\n", "tr.csv"); });
  EXPECT_NE(msg.find("tr.csv:2"), std::string::npos) << msg;
  msg = expect_usage_error([&] { trace_from_csv(head + "x,1,0.5,0,0,0,0,0,0,0\n", "tr.csv"); });
  EXPECT_NE(msg.find("phase"), std::string::npos) << msg;
  msg = expect_usage_error([&] { trace_from_csv(head + "2,1.5,0.5,0,0,0,0,0,0,0\n", "tr.csv"); });
  EXPECT_NE(msg.find("'k'"), std::string::npos) << msg;
  msg = expect_usage_error([&] { trace_from_csv("phase,k\n", "tr.csv"); });
  EXPECT_NE(msg.find("header"), std::string::npos) << msg;
  EXPECT_THROW(trace_from_csv(""), UsageError);
  EXPECT_EQ(trace_from_csv(head + good + "\n").size(), 1u);
}

TEST(Io, SolutionRoundTrip) {
  SolutionFile s;
  s.kind = "primal";
  s.scheme = "algorithm1";
  s.status = "converged";
  s.z = testsupport::rand_vec(4);
  s.t = 1e-7;
  s.lambda = 0.02;
  s.nu = 4;
  s.schedule = make_schedule(4.0, 1.0);
  s.budget = {100, 7};
  s.budget_running = {100, 9};
  s.phase1_iters = 3;
  s.phase2_iters = 80;
  s.values["objective"] = 1.25;
  s.x_recovered = testsupport::rand_vec(2);
  s.lambda_mid = {-1.0, 0.1, 0.2};
  const auto path = temp_file("solution.json");
  write_solution(s, path.string());
  const SolutionFile b = read_solution(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(b.kind, s.kind);
  EXPECT_EQ(b.status, s.status);
  EXPECT_EQ(b.z, s.z);
  EXPECT_EQ(b.t, s.t);
  EXPECT_EQ(b.schedule.sigma_bar, s.schedule.sigma_bar);
  EXPECT_EQ(b.schedule.M0, s.schedule.M0);
  EXPECT_EQ(b.budget.k_max, 100);
  EXPECT_EQ(b.budget_running.j_max, 9);
  EXPECT_EQ(b.values.at("objective"), 1.25);
  ASSERT_TRUE(b.x_recovered.has_value());
  EXPECT_EQ(*b.x_recovered, *s.x_recovered);
  EXPECT_FALSE(b.s_recovered.has_value());
  EXPECT_EQ(b.lambda_mid, s.lambda_mid);
}

TEST(Io, ExitCodes) {
  EXPECT_EQ(exit_code(ErrorKind::Usage), 1);
  EXPECT_EQ(exit_code(ErrorKind::Budget), 2);
  EXPECT_EQ(exit_code(ErrorKind::Domain), 3);
  EXPECT_EQ(exit_code(ErrorKind::Numeric), 3);
  EXPECT_EQ(exit_code(ErrorKind::Convergence), 3);
  EXPECT_EQ(exit_code(ErrorKind::Capability), 3);
}
