#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <memory>

#include <fmt/format.h>

#include "scinc/io.hpp"

using namespace scinc;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(SCINC_CLI) + " " + args + " 2>&1";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / fmt::format("scinc_cli_{}", ::testing::UnitTest::GetInstance()->random_seed());
    dir_ /= ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // x >= 0, A = 1: the central path is x = t.
  std::string line_problem() const {
    ProblemFile pf;
    pf.kind = "inclusion";
    pf.inclusion.F = barrier_orthant(1);
    pf.inclusion.A = constant_operator(Vec::Ones(1));
    pf.inclusion.z0 = Vec::Ones(1);
    const std::string p = path("line.json");
    write_problem(pf, p);
    return p;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateIsDeterministic) {
  ASSERT_EQ(run("generate --family max_eigenvalue --n 3 --p 2 --seed 5 -o " + path("a.json")).code, 0);
  ASSERT_EQ(run("generate --family max_eigenvalue --n 3 --p 2 --seed 5 -o " + path("b.json")).code, 0);
  ASSERT_EQ(run("generate --family max_eigenvalue --n 3 --p 2 --seed 6 -o " + path("c.json")).code, 0);
  EXPECT_EQ(read_text(path("a.json")), read_text(path("b.json")));
  EXPECT_NE(read_text(path("a.json")), read_text(path("c.json")));
  const CliRun s = run("generate --family sparse_lowrank --n 6 --seed 1");
  EXPECT_EQ(s.code, 0);
  EXPECT_NE(s.out.find("\"format_version\""), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("generate --family bogus --n 3").code, 1);
  EXPECT_EQ(run("generate --n 3").code, 1);
  EXPECT_EQ(run("solve " + path("missing.json")).code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("solve " + line_problem() + " --beta 0.5").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, LineSolveAndVerify) {
  const std::string p = line_problem();
  const CliRun r = run("solve " + p + " --eps 1e-6 --trace " + path("t.csv") + " -o " + path("s.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const SolutionFile s = read_solution(path("s.json"));
  EXPECT_EQ(s.status, "converged");
  EXPECT_LE(s.schedule.M0 * s.t, 1e-6);
  EXPECT_NEAR(s.z(0), s.t, 0.1 * s.t);
  EXPECT_LE(s.phase2_iters, s.budget.k_max);
  const CliRun v = run("verify " + path("s.json") + " " + path("t.csv"));
  EXPECT_EQ(v.code, 0) << v.out;
  EXPECT_NE(v.out.find("verify: ok"), std::string::npos);
}

TEST_F(Cli, EpsAtStartNeedsNoPathSteps) {
  const Schedule sch = make_schedule(1.0, 1.0);
  const std::string eps = fmt::format("{:.17g}", sch.M0 * sch.t0 * (1.0 + 1e-12));
  const CliRun r = run("solve " + line_problem() + " --eps " + eps + " -o " + path("s.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(read_solution(path("s.json")).phase2_iters, 0);
}

TEST_F(Cli, BudgetExitsTwoWithPartialTrace) {
  const CliRun r = run("solve " + line_problem() + " --eps 1e-9 --max-iters 2 --trace " + path("t.csv") + " -o " +
                    path("s.json"));
  EXPECT_EQ(r.code, 2) << r.out;
  ASSERT_TRUE(fs::exists(path("t.csv")));
  const auto rows = read_trace(path("t.csv"));
  EXPECT_FALSE(rows.empty());
  EXPECT_EQ(read_solution(path("s.json")).status, "budget");
}

TEST_F(Cli, CorruptedTraceFailsVerify) {
  const std::string p = line_problem();
  ASSERT_EQ(run("solve " + p + " --eps 1e-4 --trace " + path("t.csv") + " -o " + path("s.json")).code, 0);
  auto rows = read_trace(path("t.csv"));
  bool changed = false;
  for (auto& row : rows)
    if (row.phase == "2" && row.k > 0 && !changed) row.lambda = 0.5, changed = true;
  ASSERT_TRUE(changed);
  write_trace(rows, path("bad.csv"));
  const CliRun v = run("verify " + path("s.json") + " " + path("bad.csv") + " --details");
  EXPECT_EQ(v.code, 3) << v.out;
  EXPECT_NE(v.out.find("FAIL lambda_le_beta"), std::string::npos) << v.out;
  EXPECT_NE(v.out.find("verify: FAILED"), std::string::npos);
}

TEST_F(Cli, FixedTSchemes) {
  const std::string p = line_problem();
  for (const char* scheme : {"fgn", "dgn"}) {
    const CliRun r = run("solve " + p + " --scheme " + scheme + " --t0 2 --eps 1e-10 --trace " + path("t.csv") + " -o " +
                      path("s.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    const SolutionFile s = read_solution(path("s.json"));
    EXPECT_NEAR(s.z(0), 2.0, 1e-8) << scheme;
    for (const auto& row : read_trace(path("t.csv"))) EXPECT_EQ(row.phase, scheme);
  }
}

TEST_F(Cli, DualRowsCarryResiduals) {
  ASSERT_EQ(run("generate --family cluster_recovery --sizes 3 3 --edge-prob-in 1 --edge-prob-out 0 --seed 1 -o " +
                path("cl.json"))
                .code,
            0);
  const CliRun r = run("solve " + path("cl.json") + " --eps 1e-5 --trace " + path("t.csv") + " -o " + path("s.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const SolutionFile s = read_solution(path("s.json"));
  EXPECT_NEAR(s.values.at("dual_objective"), 12.0, 1e-3);
  ASSERT_TRUE(s.x_recovered.has_value());
  int checked = 0;
  for (const auto& row : read_trace(path("t.csv"))) {
    if (row.phase != "2" || row.k == 0) continue;
    EXPECT_LE(row.residual_primary, std::sqrt(s.nu) * row.t * (1.0 + 1e-6));
    EXPECT_LE(row.residual_aux, s.schedule.theta * row.t * (1.0 + 1e-6));
    ++checked;
  }
  EXPECT_GT(checked, 0);
  EXPECT_EQ(run("verify " + path("s.json") + " " + path("t.csv")).code, 0);
}

TEST_F(Cli, Report) {
  const CliRun e = run("report");
  EXPECT_EQ(e.code, 0);
  EXPECT_EQ(std::count(e.out.begin(), e.out.end(), '\n'), 1) << e.out;
  ASSERT_EQ(run("solve " + line_problem() + " --eps 1e-4 --trace " + path("t.csv") + " -o " + path("s.json")).code, 0);
  const CliRun r = run("report " + path("t.csv") + " --solutions " + path("s.json"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2) << r.out;
  const CliRun f = run("report --fig1 " + path("fig.csv") + " --c 0.95 --nu 10");
  EXPECT_EQ(f.code, 0) << f.out;
  const std::string fig = read_text(path("fig.csv"));
  EXPECT_EQ(fig.substr(0, fig.find('\n')), "beta,delta_t_bar,sigma_bar");
}
