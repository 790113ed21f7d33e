#pragma once

#include <span>
#include <string>
#include <vector>

#include "dynblock/dynamics.hpp"

namespace dynblock {

// g2(t, t_s) sampled on a grid of t. Entries are NaN where either occupation
// falls below kOccupationFloor.
struct TwoTimeResult {
  std::string scenario;
  double t_s = 0.0;
  double n_ts = 0.0;
  std::vector<double> t;
  std::vector<double> g2;
  std::vector<double> numerator;  // <a^dag(t) a^dag(t') a(t') a(t)>
  std::vector<double> n_t;

  // Value at the grid point nearest to `time`.
  double at(double time) const;
};

// Quantum regression from the reference time: the operator a rho(t_s) a^dag
// is propagated (unnormalized) with the physical propagator, pulses included.
// Every t must lie in [t_s, t_s + horizon], otherwise RangeError.
TwoTimeResult g2_two_time(const DensityMatrix& rho_ts, const ModeParams& params,
                          const DriveSchedule& schedule, double t_s,
                          std::span<const double> t_grid, double horizon,
                          const StepControl& control = {});

// Same, but the grid may extend to both sides of t_s. rho_anchor is the state
// at t_anchor <= every grid time. For t < t_s the symmetric value g2(t_s, t)
// is used: regression starts at t and runs up to t_s.
TwoTimeResult g2_two_time_around(const DensityMatrix& rho_anchor, double t_anchor,
                                 const ModeParams& params, const DriveSchedule& schedule,
                                 double t_s, std::span<const double> t_grid,
                                 const StepControl& control = {});

}  // namespace dynblock
