#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "lockbif/app/commands.hpp"

namespace lockbif::app {

struct CheckRow {
  std::string name;
  bool passed = false;
  double value = 0;      // measured quantity (error, count difference, ...)
  double threshold = 0;  // pass bound on `value`
  std::string detail;
};

/// Invariant suite on the configured problem. Each row is independent; a
/// row that throws is recorded as failed with the error text.
std::vector<CheckRow> run_verify(const Problem& problem, std::ostream& log);

}  // namespace lockbif::app
