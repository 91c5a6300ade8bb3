#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lockbif/app/config.hpp"
#include "lockbif/continuation.hpp"

namespace lockbif::app {

enum ExitCode : int {
  exit_ok = 0,
  exit_no_convergence = 2,
  exit_invalid_config = 3,
  exit_degenerate = 4,
  exit_invariant = 5,
};

int exit_code_for(Errc code);

struct Flags {
  std::optional<std::string> out;
  std::optional<int> k;
  std::optional<std::string> partition;
  int direction = 1;
  std::optional<double> eps;
  /// Worker threads for `sweep`; 0 means one per logical core.
  int jobs = 0;
};

/// Grid, operator, coupling and ground state shared by every command.
struct Problem {
  RunConfig cfg;
  RadialGrid<Real> grid;
  SchrodingerOperator<Real> op;
  CouplingSpec<Real> coupling;
  GroundState<Real> gs;

  explicit Problem(const RunConfig& config);

  WeightedSpectrum<Real> spectrum() const;
  /// Default sampling window inside (beta_bar, mu_min).
  std::pair<Real, Real> scan_window() const;
  std::vector<Real> scan_betas() const;
};

const std::vector<std::string>& command_names();

/// Column contracts of every CSV artifact, for --help.
std::string csv_contracts();

/// Runs one command, writing artifacts under the output directory and a
/// short report to `log`. Errors are reported on `err` and mapped to exit codes.
int run(const std::string& command, const RunConfig& cfg, const Flags& flags, std::ostream& log,
        std::ostream& err);

std::string partition_file_tag(const Partition& p);

}  // namespace lockbif::app
