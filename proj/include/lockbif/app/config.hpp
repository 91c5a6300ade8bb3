#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lockbif/continuation.hpp"
#include "lockbif/radial_operator.hpp"

namespace lockbif::app {

struct SolverSection {
  double tolerance = 1e-11;
  int max_iterations = 50;
  /// Number of weighted eigenvalue clusters to resolve.
  int kmax = 6;
  double zero_tol = 1e-7;
};

struct ScanSection {
  int samples = 50;
  std::optional<double> beta_min;
  std::optional<double> beta_max;
};

struct OutputSection {
  std::string directory = "out";
  bool csv = true;
  bool json = true;
  bool dat = false;
};

struct RunConfig {
  DomainSpec domain;
  PotentialSpec potential;
  int points = 800;
  std::vector<double> mu{1.0, 2.0};
  SolverSection solver;
  ContinuationOpts continuation;
  ScanSection scan;
  OutputSection output;

  int n() const { return static_cast<int>(mu.size()); }
};

/// INI text with sections [domain] [potential] [grid] [coupling] [solver]
/// [continuation] [scan] [output]. Unknown sections or keys are rejected.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Cross-field checks; throws Error(invalid_config or invalid_domain).
void validate(const RunConfig& cfg);

/// Resolved configuration, echoed into every artifact.
nlohmann::ordered_json to_json(const RunConfig& cfg);
std::vector<std::string> to_ini_lines(const RunConfig& cfg);

const char* to_string(DomainKind kind);
const char* to_string(PotentialKind kind);

}  // namespace lockbif::app
