#pragma once

// Run configuration, the four run modes and their artifacts.

#include "mssflow/boundary_data.hpp"
#include "mssflow/domain.hpp"
#include "mssflow/flow.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mssflow {

enum class Mode { Solve, CheckHypothesis, DensityOracle, Exterior };
std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitHypothesis = 2,
  kExitBlowUp = 3,
  kExitMaxSteps = 4,
  kExitInvariant = 5,
  kExitExteriorWorsening = 6,
};

struct DensityConfig {
  std::string state = "all";  // plane, offset_plane, half_plane, sphere_cap or all
  int m = 1;
  double time_gap = 0.005;
  double offset = 0.1;
  double extent = 1.5;
  double h = 1.0 / 64.0;
  double cutoff = 1.0;
  double truncation = 0.0;
  double tolerance = 1e-3;
  double shrinker_c = 1.0;
  double order_threshold = 1.8;
};

struct RunConfig {
  Mode mode = Mode::Solve;
  DomainSpec domain;
  std::optional<BoundaryMap> psi;
  double h = 0.0;
  double snap_fraction = 0.5;
  FlowOptions flow;
  char condition = 'A';
  double delta = 0.0;  // 0 selects 0.9 delta0
  double c = 0.5;
  bool ball_variant = false;
  std::vector<double> radii;
  std::vector<double> probes = {0.4, 0.6, 0.8};  // fractions of the largest radius
  std::string out_dir = ".";
  DensityConfig density;
};

/// INI text with sections [run] [domain] [boundary] [grid] [flow] [hypothesis]
/// [exterior] [output] [density]. Unknown sections or keys throw ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

struct RunSummary {
  int exit_code = kExitOk;
  Mode mode = Mode::Solve;
  std::string outcome;
  double residual = 0.0;
  double max_lambda = 0.0;
  [[nodiscard]] std::string line() const;
};

struct ShellResult {
  double radius = 0.0;
  Outcome outcome = Outcome::MaxSteps;
  double residual = 0.0;
  double max_lambda = 0.0;
  long steps = 0;
  bool hypothesis_pass = false;
  bool invariants_pass = false;
};

struct ExteriorReport {
  std::vector<ShellResult> shells;
  std::vector<double> shell_difference;  // sup |f_k - f_{k+1}| on common interior nodes
  Mat l_estimate;
  double l_fit_residual = 0.0;
  std::vector<double> probe_radii;
  std::vector<double> decay;  // sup over the probe sphere of |Df - l|
  double r0 = 0.0;
  double delta0 = 0.0;
};

/// Radius threshold r0 = 2 (diam(dE) + 2 eta0 + d0) for an exterior domain.
double exterior_r0(const DomainSpec& spec);

RunSummary run_solve(const RunConfig& cfg, bool force);
RunSummary run_check(const RunConfig& cfg);
RunSummary run_density_oracle(const RunConfig& cfg);
RunSummary run_exterior(const RunConfig& cfg, bool force, ExteriorReport* report = nullptr);
RunSummary run(const RunConfig& cfg, bool force);

}  // namespace mssflow
