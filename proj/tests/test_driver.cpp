#include "mssflow/driver.hpp"
#include "mssflow/error.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

using namespace mssflow;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

const char* kSolveDisc = R"([run]
mode = solve
[domain]
kind = ball
center = 0 0
radius = 1
[boundary]
family = trigonometric
amplitude = 0.002 0.001
wave = 2 1; -1 2.5
phase = 0.1 0
[grid]
h = 0.0625
[flow]
tol_residual = 1e-7
monitor_every = 50
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mssflow_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(ParseConfig, SolveDisc) {
  const RunConfig c = parse(kSolveDisc);
  EXPECT_EQ(c.mode, Mode::Solve);
  EXPECT_EQ(c.domain.kind, DomainKind::Ball);
  ASSERT_TRUE(c.psi.has_value());
  EXPECT_EQ(c.psi->m(), 2);
  EXPECT_EQ(c.h, 0.0625);
  EXPECT_EQ(c.flow.monitor_every, 50);
  EXPECT_EQ(c.flow.tol_residual, 1e-7);
  EXPECT_EQ(c.condition, 'A');
  EXPECT_EQ(c.delta, 0.0);
}

TEST(ParseConfig, RejectsUnknownSectionsAndKeys) {
  EXPECT_THROW(parse(std::string(kSolveDisc) + "[extra]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse(std::string(kSolveDisc) + "[grid]\nspacing = 1\n"), ConfigError);
  std::string bad = kSolveDisc;
  bad.replace(bad.find("h = 0.0625"), 10, "h = fine");
  EXPECT_THROW(parse(bad), ConfigError);
  EXPECT_THROW(parse("[run]\nmode = sprint\n"), ConfigError);
  EXPECT_THROW(parse("[run]\nmode = solve\n[domain]\nkind = torus\n"), ConfigError);
}

TEST(ParseConfig, LawsonOssermanBase) {
  const std::string head =
      "[run]\nmode = check_hypothesis\n[domain]\nkind = ball\ncenter = 0 0 0 0\nradius = 1\n[grid]\nh = 0.125\n"
      "[boundary]\nfamily = lawson_osserman_scaled\nscale = 0.5\n";
  EXPECT_EQ(parse(head).psi->m(), 2);
  EXPECT_EQ(parse(head + "base = power\n").psi->m(), 2);
  EXPECT_EQ(parse(head + "base = hopf\n").psi->m(), 3);
  EXPECT_THROW(parse(head + "base = sphere\n"), ConfigError);
}

TEST(ParseConfig, ExteriorSchedule) {
  const std::string head =
      "[run]\nmode = exterior\n[domain]\nkind = exterior\ncenter = 0 0\ninner_radius = 1\n[grid]\nh = 0.25\n"
      "[boundary]\nfamily = dipole\namplitude = 0.003\ndirection = 1 0\n";
  const double r0 = exterior_r0(parse(head + "[exterior]\nradii = 9 11\n").domain);
  EXPECT_NEAR(r0, 2.0 * (2.0 + 2.0 * estimate_c0_eta0(parse(head + "[exterior]\nradii = 9\n").domain).eta0 + 1.0), 1e-12);
  EXPECT_LT(r0, 9.0);
  EXPECT_EQ(parse(head + "[exterior]\nradii = 9 11 13\n").radii.size(), 3u);
  EXPECT_THROW(parse(head + "[exterior]\nradii = 3 11\n"), ConfigError);
  EXPECT_THROW(parse(head + "[exterior]\nradii = 11 9\n"), ConfigError);
  EXPECT_THROW(parse(head + "[exterior]\nradii = 9 11\nprobes = 0.5\n"), ConfigError);
  EXPECT_THROW(exterior_r0(DomainSpec::ball(Vec::Zero(2), 1.0)), PreconditionError);
}

TEST(RunSummary, LineFormat) {
  RunSummary s;
  s.mode = Mode::Solve;
  s.outcome = "converged";
  s.residual = 9.5e-7;
  s.max_lambda = 0.25;
  EXPECT_EQ(s.line(), "mode=solve outcome=converged residual=9.5e-07 max_lambda=0.25");
}

TEST(Run, CheckHypothesisExitCodes) {
  const std::string base =
      "[run]\nmode = check_hypothesis\n[domain]\nkind = ball\ncenter = 0 0\nradius = 1\n[grid]\nh = 0.03125\n"
      "[hypothesis]\ncondition = A\ndelta = 0.25\n[boundary]\nfamily = linear\n";
  RunConfig fail = parse(base + "matrix = 0.2 0; 0 0\n");
  fail.out_dir = scratch("check_fail").string();
  const RunSummary f = run(fail, false);
  EXPECT_EQ(f.exit_code, kExitHypothesis);
  EXPECT_EQ(f.outcome, "fail");
  EXPECT_NEAR(f.residual, 1.8, 1e-12);
  EXPECT_NE(slurp(fs::path(fail.out_dir) / "report.txt").find("lhs = 1.8"), std::string::npos);

  RunConfig pass = parse(base + "matrix = 0.02 0; 0 0\n");
  pass.out_dir = scratch("check_pass").string();
  EXPECT_EQ(run(pass, false).exit_code, kExitOk);
}

TEST(Run, SolveWritesArtifactsAndIsDeterministic) {
  RunConfig c = parse(kSolveDisc);
  c.out_dir = scratch("solve_a").string();
  const RunSummary a = run(c, false);
  EXPECT_EQ(a.exit_code, kExitOk);
  EXPECT_EQ(a.outcome, "converged");
  EXPECT_LT(a.residual, 1e-7);
  EXPECT_TRUE(std::regex_match(a.line(), std::regex(R"(mode=solve outcome=converged residual=\S+ max_lambda=\S+)")));
  for (const char* f : {"report.txt", "monitors.csv", "field.dat"}) EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / f)) << f;
  const std::string report = slurp(fs::path(c.out_dir) / "report.txt");
  EXPECT_NE(report.find("clause (i) max_lambda: pass"), std::string::npos);
  EXPECT_EQ(report.find("FAIL"), std::string::npos);

  const std::string first = c.out_dir;
  c.out_dir = scratch("solve_b").string();
  run(c, false);
  EXPECT_EQ(slurp(fs::path(first) / "monitors.csv"), slurp(fs::path(c.out_dir) / "monitors.csv"));
  EXPECT_EQ(slurp(fs::path(first) / "field.dat"), slurp(fs::path(c.out_dir) / "field.dat"));
}

TEST(Run, SolveExitCodes) {
  RunConfig steps = parse(std::string(kSolveDisc) + "max_steps = 5\n");
  steps.out_dir = scratch("solve_steps").string();
  EXPECT_EQ(run(steps, false).exit_code, kExitMaxSteps);

  const std::string steep =
      "[run]\nmode = solve\n[domain]\nkind = ball\ncenter = 0 0\nradius = 1\n[grid]\nh = 0.0625\n"
      "[boundary]\nfamily = trigonometric\namplitude = 0.5\nwave = 4 0\n[flow]\nblowup_lambda = 1.5\n";
  RunConfig hyp = parse(steep);
  hyp.out_dir = scratch("solve_hyp").string();
  const RunSummary h = run(hyp, false);
  EXPECT_EQ(h.exit_code, kExitHypothesis);
  EXPECT_EQ(h.outcome, "hypothesis_fail");
  EXPECT_FALSE(fs::exists(fs::path(hyp.out_dir) / "monitors.csv"));
  const RunSummary b = run(hyp, true);
  EXPECT_EQ(b.exit_code, kExitBlowUp);
  EXPECT_EQ(b.outcome, "blow_up");
}

TEST(Run, DensityOracle) {
  RunConfig c = parse("[run]\nmode = density_oracle\n[density]\nstate = all\nh = 0.03125\n");
  c.out_dir = scratch("density").string();
  const RunSummary s = run(c, false);
  EXPECT_EQ(s.exit_code, kExitOk);
  const std::string report = slurp(fs::path(c.out_dir) / "report.txt");
  for (const char* key : {"plane_density", "offset_plane_density", "half_plane_density", "sphere_cap_shrinker_order"})
    EXPECT_NE(report.find(key), std::string::npos) << key;
}
