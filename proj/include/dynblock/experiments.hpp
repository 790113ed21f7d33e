#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dynblock/correlation.hpp"
#include "dynblock/dynamics.hpp"

namespace dynblock {

enum class ScenarioKind { TimeTrace, OccupationSweep, Colormap, TwoTime, Checks };
enum class Fig1Variant { Combined, Continuous, PulsesOnly };
enum class Regime { Weak, Strong };

const char* to_string(ScenarioKind kind);
const char* to_string(Fig1Variant variant);
const char* to_string(Regime regime);

// Everything needed to rerun one figure-style experiment. Pulses sit at
// T, 2T, ... up to the start of the last measured period; the run starts from
// vacuum and the first `warmup_periods` periods are discarded.
struct ScenarioConfig {
  std::string name = "fig1";
  ScenarioKind kind = ScenarioKind::TimeTrace;
  ModeParams mode{2.0, 0.05};
  Complex P0{0.2, 0.0};
  Complex P1{1.0, 0.0};
  double period = 18.5;
  PulseShape shape = PulseShape::Delta;
  double sigma = 0.0;
  int dim = 25;
  int warmup_periods = 2;
  int measured_periods = 1;
  double sample_dt = 0.005;
  // Sweep axes. An empty alpha grid means "mode.alpha only".
  std::vector<double> P0_grid;
  std::vector<double> alpha_grid;
  // Two-time sampling around t_s.
  double two_time_half_width = 3.0;
  double two_time_dt = 0.02;
  std::vector<int> dim_ladder;
  StepControl step;

  double horizon() const { return (warmup_periods + measured_periods) * period; }
  // [warmup * T, (warmup + 1) * T]
  std::pair<double, double> window() const;
  DriveSchedule schedule() const;
  void validate() const;

  static ScenarioConfig fig1(Fig1Variant variant = Fig1Variant::Combined);
  static ScenarioConfig fig2();
  static ScenarioConfig fig3();
  static ScenarioConfig fig4(Regime regime);
};

// n points from lo to hi, evenly spaced in log.
std::vector<double> log_grid(double lo, double hi, int n);

Trajectory run_scenario(const ScenarioConfig& config);
Trajectory run_fig1(Fig1Variant variant);

struct SweepPoint {
  double alpha = 0.0;
  double P0 = 0.0;
  double t_s = 0.0;
  double g2_ts = 0.0;
  double n_ts = 0.0;
  double g0 = 0.0;  // conventional (continuous drive) steady state
  double n0 = 0.0;
  bool converged = false;  // no truncation headroom violation anywhere in the point
};

struct SweepResult {
  std::vector<double> alpha_grid;
  std::vector<double> P0_grid;
  std::vector<SweepPoint> points;  // alpha-major: index = ia * P0_grid.size() + ip

  const SweepPoint& at(std::size_t ia, std::size_t ip) const {
    return points.at(ia * P0_grid.size() + ip);
  }
  bool all_converged() const;
};

// One point of a sweep: the combined-drive minimum in the measurement window
// and the conventional pair.
SweepPoint run_sweep_point(const ScenarioConfig& config, double alpha, double P0);

// Runs every (alpha, P0) pair on a pool of `jobs` threads (0 = hardware
// concurrency). Output order depends only on the grid.
SweepResult run_sweep(const ScenarioConfig& config, unsigned jobs = 0);
SweepResult run_fig2(const std::vector<double>& P0_grid, unsigned jobs = 0);
SweepResult run_fig3(const std::vector<double>& alpha_grid, const std::vector<double>& P0_grid,
                     unsigned jobs = 0);

// g2 re-gridded against the measured occupation, one row per alpha. Linear
// interpolation in log(n); NaN outside a row's sampled range.
struct OccupationSurface {
  std::vector<double> alpha_grid;
  std::vector<double> n_grid;
  std::vector<std::vector<double>> combined;
  std::vector<std::vector<double>> conventional;
};
OccupationSurface regrid_by_occupation(const SweepResult& sweep, const std::vector<double>& n_grid);

struct Fig4Result {
  ScenarioConfig config;
  WindowMinimum minimum;
  TwoTimeResult combined;
  TwoTimeResult conventional;
};

Fig4Result run_two_time(const ScenarioConfig& config);

// Largest max/min ratio of g2 over any `width`-wide stretch of the grid
// within |t - t_s| <= reach. Undefined samples are skipped.
double max_window_ratio(const TwoTimeResult& r, double reach, double width);
Fig4Result run_fig4(Regime regime);

struct Eq6Report {
  double t_start = 0.0;
  double t_end = 0.0;
  double g0 = 0.0;
  double g2_before = 0.0;     // just before the opening pulse
  double g2_after = 0.0;      // just after it
  double g2_end = 0.0;        // just before the closing pulse / end of period
  double integral = 0.0;      // int f dt over the period, trapezoid
  double max_abs_f = 0.0;
  double normalized_integral = 0.0;  // |integral| / (max|f| T)
  double end_deviation = 0.0;        // |g2_end - g0|
  // max |g2(t) - g2_after - 4 int P f|, partial integrals by a fourth-order rule
  double reconstruction_error = 0.0;
  bool cumulative_changes_sign = false;
  bool integral_ok = false;
  bool end_ok = false;
  bool reconstruction_ok = false;

  bool passed() const { return integral_ok && end_ok && reconstruction_ok; }
};

// Integrates f over period `period_index` ([m T, (m+1) T]) of a settled
// trajectory. Partial integrals start from the post-pulse g2; the jump across
// the opening pulse is reported separately.
// Throws NotSettled when g2 entering the period is more than 1e-3 from g0.
Eq6Report check_eq6_cycle(const Trajectory& traj, int period_index);

// Largest pointwise g2 difference between period m and period m + 1.
double period_to_period_difference(const Trajectory& traj, int period_index);

struct GaussianRow {
  double sigma = 0.0;
  double min_g2 = 0.0;
  double t_s = 0.0;
};

struct GaussianReport {
  double g0 = 0.0;
  double delta_min_g2 = 0.0;
  std::vector<GaussianRow> rows;
  bool below_g0_for_short_pulses = false;  // every sigma <= 0.3
  std::optional<double> narrow_relative_gap;  // |min(0.05) - min(delta)| / min(delta)

  bool passed() const {
    return below_g0_for_short_pulses && (!narrow_relative_gap || *narrow_relative_gap < 0.05);
  }
};

GaussianReport gaussian_robustness(const std::vector<double>& sigma_grid,
                                   const ScenarioConfig& base = ScenarioConfig::fig1());

// Reruns the scenario's key scalars on each dim of the ladder (the
// config's own ladder when `dims` is empty).
ConvergenceReport scenario_convergence(const ScenarioConfig& config, std::vector<int> dims = {});

}  // namespace dynblock
