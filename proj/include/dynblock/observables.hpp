#pragma once

#include <optional>
#include <vector>

#include "dynblock/model.hpp"
#include "dynblock/state.hpp"

namespace dynblock {

// Below this occupation g2 and f are reported as undefined.
inline constexpr double kOccupationFloor = 1e-12;

// Low-order normally ordered moments of a state.
struct Moments {
  double n = 0.0;       // <a^dag a>
  Complex psi;          // <a>
  Complex C;            // <a^dag a a>
  double pairs = 0.0;   // <a^dag a^dag a a>
};

Moments moments(const OperatorMatrix& rho);

struct ObservableRecord {
  double t = 0.0;
  double n = 0.0;
  Complex psi;
  Complex C;
  std::optional<double> g2;
  std::optional<double> f;
  Complex drive;            // smooth part of P(t) at this sample
  bool pulse = false;       // a delta pulse was applied at this instant
  bool pre_pulse = false;   // record taken just before that pulse
};

ObservableRecord measure(const OperatorMatrix& rho, double t = 0.0);

// <a^dag a^dag a a> / n^2, undefined when n < kOccupationFloor.
std::optional<double> g2_equal(const DensityMatrix& rho);
std::optional<double> g2_equal(const Moments& m);

// f = (g2 n Im psi - Im C) / n^2, the factor in dg2/dt = 4 P f.
std::optional<double> f_of_state(const DensityMatrix& rho);
std::optional<double> f_of_state(const Moments& m);

// Both sides of a delta pulse at the same instant.
struct PulseSnapshot {
  int grid_index = -1;  // grid sample carrying the post-pulse state, -1 if off-grid
  ObservableRecord pre;
  ObservableRecord post;
};

// Uniformly sampled evolution record. records[k] belongs to t = t0 + k * sample_dt;
// at a pulse instant the grid sample holds the post-pulse state and the
// pre-pulse state sits in pulse_records.
struct Trajectory {
  int dim = 0;
  ModeParams params;
  DriveSchedule schedule;
  double sample_dt = 0.0;
  std::vector<ObservableRecord> records;
  std::vector<PulseSnapshot> pulse_records;
  std::optional<DensityMatrix> final_state;
  bool truncation_warning = false;
  double max_tail_population = 0.0;

  std::vector<double> times() const;
  // First grid index with t >= time (within a grid-relative slack).
  int index_at_or_after(double time) const;
};

struct WindowMinimum {
  double t_s = 0.0;
  double g2_min = 0.0;
  double n_at_min = 0.0;
  int index = -1;
};

// argmin of g2 over defined samples in [t_a, t_b]; ties go to the earliest.
WindowMinimum find_window_min(const Trajectory& traj, double t_a, double t_b);

struct RateLawOptions {
  // Samples outside [t_begin, t_end] are ignored. Defaults cover every
  // segment that starts at a pulse (the whole run when there are none).
  std::optional<double> t_begin;
  std::optional<double> t_end;
  double occupation_factor = 10.0;  // require n > factor * kOccupationFloor
  // Centred difference order, 2 or 4.
  int stencil_order = 4;
};

struct RateLawReport {
  int samples = 0;
  double max_abs_residual = 0.0;    // max |dg2/dt - 4 P f|
  double max_abs_prediction = 0.0;  // max |4 P f|
  double max_abs_derivative = 0.0;  // max |dg2/dt|
  // max_abs_residual / max_abs_prediction, or the absolute residual when the
  // prediction is identically zero.
  double max_relative_error = 0.0;
};

// Compares centred finite differences of g2(t,t) with 4 P(t) f(t) on
// pulse-free stretches. Samples whose stencil straddles a delta pulse are
// skipped.
RateLawReport validate_rate_law(const Trajectory& traj, const RateLawOptions& opts = {});

}  // namespace dynblock
