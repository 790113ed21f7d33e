#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynblock/experiments.hpp"

namespace dynblock {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // the headline metric
  double threshold = 0.0;  // what it is compared against
  std::string detail;
};

struct CheckSettings {
  StepControl step;
  // Replaces the truncation of every single-dim run; ladders keep their dims.
  std::optional<int> dim;
};

// coherent, steady, eq4, eq6, convergence
const std::vector<std::string>& check_names();

// Runs one named check. Library errors raised while computing become a
// failed result; unknown names throw InvalidArgument.
CheckResult run_check(const std::string& name, const CheckSettings& settings = {});

struct LinearModeReport {
  double max_g2_deviation = 0.0;  // max |g2 - 1| over samples with n >= kOccupationFloor
  double min_purity = 1.0;
  int samples = 0;
};

// The scenario with alpha forced to 0; every sample's state is inspected.
LinearModeReport linear_mode_report(ScenarioConfig config);

struct SteadyComparison {
  double trace_distance = 0.0;
  double tail_population = 0.0;
};

// Null-space versus long-time steady state at one parameter point.
SteadyComparison compare_steady_states(int dim, const ModeParams& params, Complex P0,
                                       double tol = 1e-8, const StepControl& step = {});

}  // namespace dynblock
