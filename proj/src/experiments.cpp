#include "dynblock/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "dynblock/errors.hpp"

namespace dynblock {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double slack(double t) { return 1e-9 * std::max(1.0, std::abs(t)); }

bool near(double a, double b) { return std::abs(a - b) <= slack(b); }

EvolveOptions evolve_options(const ScenarioConfig& config) {
  EvolveOptions opts;
  opts.step = config.step;
  opts.keep_final_state = false;
  return opts;
}

double conventional_g2(const DensityMatrix& ss) {
  return g2_equal(ss).value_or(kNaN);
}

}  // namespace

const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::TimeTrace: return "time-trace";
    case ScenarioKind::OccupationSweep: return "occupation-sweep";
    case ScenarioKind::Colormap: return "colormap";
    case ScenarioKind::TwoTime: return "two-time";
    case ScenarioKind::Checks: return "checks";
  }
  return "?";
}

const char* to_string(Fig1Variant variant) {
  switch (variant) {
    case Fig1Variant::Combined: return "combined";
    case Fig1Variant::Continuous: return "continuous";
    case Fig1Variant::PulsesOnly: return "pulses_only";
  }
  return "?";
}

const char* to_string(Regime regime) {
  return regime == Regime::Weak ? "weak" : "strong";
}

std::pair<double, double> ScenarioConfig::window() const {
  return {warmup_periods * period, (warmup_periods + 1) * period};
}

DriveSchedule ScenarioConfig::schedule() const {
  const int count = warmup_periods + measured_periods - 1;
  if (P1 == Complex{0.0, 0.0} || count <= 0) return DriveSchedule::continuous(P0, period);
  return DriveSchedule::periodic(P0, P1, period, count, shape, sigma);
}

void ScenarioConfig::validate() const {
  mode.validate();
  if (dim < 3) throw InvalidSpace("scenario dim must be >= 3");
  if (!(period > 0.0) || !std::isfinite(period)) throw InvalidArgument("period must be positive");
  if (warmup_periods < 1) throw InvalidArgument("warmup_periods must be >= 1");
  if (measured_periods < 1) throw InvalidArgument("horizon must cover warm-up plus one period");
  if (!(sample_dt > 0.0) || sample_dt > period) throw InvalidArgument("sample_dt must be in (0, T]");
  if (!std::isfinite(P0.real()) || !std::isfinite(P0.imag()) || !std::isfinite(P1.real()) ||
      !std::isfinite(P1.imag()))
    throw InvalidArgument("drive amplitudes must be finite");
  if (shape == PulseShape::Gaussian && !(sigma > 0.0))
    throw InvalidArgument("gaussian pulses need sigma > 0");
  if (!(two_time_half_width > 0.0) || !(two_time_dt > 0.0))
    throw InvalidArgument("two-time grid must have positive width and step");
  for (double p : P0_grid)
    if (!std::isfinite(p)) throw InvalidArgument("P0 grid entries must be finite");
  for (double a : alpha_grid)
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("alpha grid entries must be >= 0");
  for (int d : dim_ladder)
    if (d < 3) throw InvalidSpace("ladder dims must be >= 3");
  schedule().validate();
}

ScenarioConfig ScenarioConfig::fig1(Fig1Variant variant) {
  ScenarioConfig c;
  // Panel letters of the figure.
  c.name = variant == Fig1Variant::Combined     ? "fig1b"
           : variant == Fig1Variant::Continuous ? "fig1d"
                                                : "fig1f";
  c.kind = ScenarioKind::TimeTrace;
  c.mode = {2.0, 0.05};
  c.P0 = variant == Fig1Variant::PulsesOnly ? 0.0 : 0.2;
  c.P1 = variant == Fig1Variant::Continuous ? 0.0 : 1.0;
  c.period = 18.5;
  c.dim = 25;
  c.measured_periods = 2;
  c.sample_dt = 0.005;
  c.dim_ladder = {20, 25, 30};
  return c;
}

ScenarioConfig ScenarioConfig::fig2() {
  ScenarioConfig c;
  c.name = "fig2";
  c.kind = ScenarioKind::OccupationSweep;
  c.mode = {2.0, 0.05};
  c.P0 = 0.2;
  c.P1 = 0.5;
  c.period = 18.5;
  c.dim = 25;
  c.sample_dt = 0.01;
  c.P0_grid = log_grid(0.05, 1.0, 20);
  c.dim_ladder = {20, 25, 30};
  return c;
}

ScenarioConfig ScenarioConfig::fig3() {
  ScenarioConfig c;
  c.name = "fig3";
  c.kind = ScenarioKind::Colormap;
  c.mode = {0.25, 1.0};
  c.P0 = 0.5;
  c.P1 = 0.2;
  c.period = 12.3;
  c.dim = 20;
  c.sample_dt = 0.01;
  c.P0_grid = log_grid(0.05, 1.0, 20);
  c.alpha_grid = log_grid(0.02, 2.0, 20);
  c.dim_ladder = {15, 20, 25};
  return c;
}

ScenarioConfig ScenarioConfig::fig4(Regime regime) {
  ScenarioConfig c = regime == Regime::Weak ? fig2() : fig3();
  c.name = std::string("fig4_") + to_string(regime);
  c.kind = ScenarioKind::TwoTime;
  c.step.rtol = 1e-10;
  c.step.atol = 1e-12;
  c.P0_grid.clear();
  c.alpha_grid.clear();
  return c;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0.0) || !(hi >= lo)) throw InvalidArgument("log grid needs 0 < lo <= hi, n >= 1");
  std::vector<double> g(static_cast<std::size_t>(n));
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

Trajectory run_scenario(const ScenarioConfig& config) {
  config.validate();
  const FockSpace space(config.dim);
  return evolve(DensityMatrix::vacuum(space), config.mode, config.schedule(), config.horizon(),
                config.sample_dt, evolve_options(config));
}

Trajectory run_fig1(Fig1Variant variant) { return run_scenario(ScenarioConfig::fig1(variant)); }

bool SweepResult::all_converged() const {
  return std::all_of(points.begin(), points.end(), [](const SweepPoint& p) { return p.converged; });
}

SweepPoint run_sweep_point(const ScenarioConfig& config, double alpha, double P0) {
  ScenarioConfig c = config;
  c.mode.alpha = alpha;
  c.P0 = P0;
  const Trajectory traj = run_scenario(c);
  const auto [ta, tb] = c.window();
  const WindowMinimum m = find_window_min(traj, ta, tb);

  const FockSpace space(c.dim);
  const DensityMatrix ss = steady_state_direct(space, c.mode, c.P0);

  SweepPoint p;
  p.alpha = alpha;
  p.P0 = P0;
  p.t_s = m.t_s;
  p.g2_ts = m.g2_min;
  p.n_ts = m.n_at_min;
  p.g0 = conventional_g2(ss);
  p.n0 = moments(ss.matrix()).n;
  p.converged = !traj.truncation_warning && traj.max_tail_population < kTailLimit &&
                ss.tail_population() < kTailLimit;
  return p;
}

SweepResult run_sweep(const ScenarioConfig& config, unsigned jobs) {
  config.validate();
  SweepResult result;
  result.P0_grid = config.P0_grid;
  result.alpha_grid = config.alpha_grid.empty() ? std::vector<double>{config.mode.alpha}
                                                : config.alpha_grid;
  if (result.P0_grid.empty()) throw InvalidArgument("sweep needs a nonempty P0 grid");
  const std::size_t np = result.P0_grid.size();
  const std::size_t total = result.alpha_grid.size() * np;
  result.points.resize(total);

  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, total));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= total) return;
      try {
        result.points[k] = run_sweep_point(config, result.alpha_grid[k / np], result.P0_grid[k % np]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(total);
        return;
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

SweepResult run_fig2(const std::vector<double>& P0_grid, unsigned jobs) {
  ScenarioConfig c = ScenarioConfig::fig2();
  c.P0_grid = P0_grid;
  return run_sweep(c, jobs);
}

SweepResult run_fig3(const std::vector<double>& alpha_grid, const std::vector<double>& P0_grid,
                     unsigned jobs) {
  ScenarioConfig c = ScenarioConfig::fig3();
  if (alpha_grid.empty()) throw InvalidArgument("sweep needs a nonempty alpha grid");
  c.alpha_grid = alpha_grid;
  c.P0_grid = P0_grid;
  return run_sweep(c, jobs);
}

namespace {

// Piecewise-linear interpolation of y against log(x) after sorting by x.
std::vector<double> interpolate_row(std::vector<std::pair<double, double>> xy,
                                    const std::vector<double>& at) {
  std::vector<double> out(at.size(), kNaN);
  xy.erase(std::remove_if(xy.begin(), xy.end(),
                          [](const auto& p) {
                            return !(p.first > 0.0) || !std::isfinite(p.second);
                          }),
           xy.end());
  if (xy.empty()) return out;
  std::sort(xy.begin(), xy.end());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double x = at[i];
    if (x < xy.front().first || x > xy.back().first) continue;
    auto hi = std::lower_bound(xy.begin(), xy.end(), x,
                               [](const auto& p, double v) { return p.first < v; });
    if (hi->first == x || hi == xy.begin()) {
      out[i] = hi->second;
      continue;
    }
    auto lo = hi - 1;
    const double w = (std::log(x) - std::log(lo->first)) / (std::log(hi->first) - std::log(lo->first));
    out[i] = lo->second + w * (hi->second - lo->second);
  }
  return out;
}

}  // namespace

OccupationSurface regrid_by_occupation(const SweepResult& sweep, const std::vector<double>& n_grid) {
  OccupationSurface s;
  s.alpha_grid = sweep.alpha_grid;
  s.n_grid = n_grid;
  for (std::size_t ia = 0; ia < sweep.alpha_grid.size(); ++ia) {
    std::vector<std::pair<double, double>> comb, conv;
    for (std::size_t ip = 0; ip < sweep.P0_grid.size(); ++ip) {
      const SweepPoint& p = sweep.at(ia, ip);
      comb.emplace_back(p.n_ts, p.g2_ts);
      conv.emplace_back(p.n0, p.g0);
    }
    s.combined.push_back(interpolate_row(std::move(comb), n_grid));
    s.conventional.push_back(interpolate_row(std::move(conv), n_grid));
  }
  return s;
}

Fig4Result run_two_time(const ScenarioConfig& config) {
  config.validate();
  Fig4Result r;
  r.config = config;
  const Trajectory traj = run_scenario(config);
  const auto [ta, tb] = config.window();
  r.minimum = find_window_min(traj, ta, tb);
  const double t_s = r.minimum.t_s;
  const double w = config.two_time_half_width;

  const int half = static_cast<int>(std::floor(w / config.two_time_dt + 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(2 * half + 1));
  for (int k = -half; k <= half; ++k) grid.push_back(t_s + k * config.two_time_dt);

  const FockSpace space(config.dim);
  const DriveSchedule schedule = config.schedule();
  // Same sample stops as run_scenario up to the anchor.
  EvolveOptions opts = evolve_options(config);
  opts.keep_final_state = true;
  const Trajectory lead = evolve(DensityMatrix::vacuum(space), config.mode, schedule,
                                 grid.front(), config.sample_dt, opts);
  const double t_anchor = std::min(lead.records.back().t, grid.front());
  const DensityMatrix& anchor = *lead.final_state;
  r.combined = g2_two_time_around(anchor, t_anchor, config.mode, schedule, t_s, grid, config.step);
  r.combined.scenario = config.name + "_combined";

  const DriveSchedule cw = DriveSchedule::continuous(config.P0, config.period);
  const DensityMatrix ss = steady_state_direct(space, config.mode, config.P0);
  r.conventional = g2_two_time_around(ss, t_anchor, config.mode, cw, t_s, grid, config.step);
  r.conventional.scenario = config.name + "_conventional";
  return r;
}

double max_window_ratio(const TwoTimeResult& r, double reach, double width) {
  double worst = 1.0;
  const std::size_t n = r.t.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (r.t[i] < r.t_s - reach - slack(r.t_s)) continue;
    if (r.t[i] + width > r.t_s + reach + slack(r.t_s)) break;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t j = i; j < n && r.t[j] <= r.t[i] + width + slack(r.t[i]); ++j) {
      if (!std::isfinite(r.g2[j])) continue;
      lo = std::min(lo, r.g2[j]);
      hi = std::max(hi, r.g2[j]);
    }
    if (lo > 0.0 && std::isfinite(hi)) worst = std::max(worst, hi / lo);
  }
  return worst;
}

Fig4Result run_fig4(Regime regime) { return run_two_time(ScenarioConfig::fig4(regime)); }

namespace {

struct PeriodBounds {
  int i0 = 0;
  int i1 = 0;
  const PulseSnapshot* opening = nullptr;
  const PulseSnapshot* closing = nullptr;
};

PeriodBounds period_bounds(const Trajectory& traj, int m) {
  if (m < 0) throw RangeError("period index must be >= 0");
  const double T = traj.schedule.period;
  const double t0 = m * T, t1 = (m + 1) * T;
  if (traj.records.empty() || t0 < traj.records.front().t - slack(t0) ||
      t1 > traj.records.back().t + slack(t1))
    throw RangeError("period lies outside the trajectory");
  PeriodBounds b;
  b.i0 = traj.index_at_or_after(t0);
  b.i1 = traj.index_at_or_after(t1);
  if (!near(traj.records[b.i0].t, t0) || !near(traj.records[b.i1].t, t1))
    throw UnsupportedConfiguration("period boundaries must fall on the sample grid");
  for (const auto& p : traj.pulse_records) {
    if (p.grid_index == b.i0) b.opening = &p;
    if (p.grid_index == b.i1) b.closing = &p;
  }
  return b;
}

double require_g2(const ObservableRecord& r) {
  if (!r.g2) throw RangeError("g2 undefined inside the period");
  return *r.g2;
}

}  // namespace

Eq6Report check_eq6_cycle(const Trajectory& traj, int period_index) {
  if (!traj.schedule.is_real()) throw UnsupportedConfiguration("the integral form needs a real drive");
  const PeriodBounds b = period_bounds(traj, period_index);
  const double T = traj.schedule.period;

  Eq6Report rep;
  rep.t_start = traj.records[b.i0].t;
  rep.t_end = traj.records[b.i1].t;
  const FockSpace space(traj.dim);
  rep.g0 = conventional_g2(steady_state_direct(space, traj.params, traj.schedule.P0));

  const ObservableRecord& first = traj.records[b.i0];
  const ObservableRecord& before = b.opening ? b.opening->pre : first;
  const ObservableRecord& last = b.closing ? b.closing->pre : traj.records[b.i1];
  rep.g2_before = require_g2(before);
  rep.g2_after = require_g2(first);
  rep.g2_end = require_g2(last);
  if (std::abs(rep.g2_before - rep.g0) > 1e-3)
    throw NotSettled("g2 entering the period differs from g0 by " +
                     std::to_string(std::abs(rep.g2_before - rep.g0)));

  auto f_at = [&](int k) -> double {
    const ObservableRecord& r = k == b.i1 ? last : traj.records[static_cast<std::size_t>(k)];
    if (!r.f) throw RangeError("f undefined inside the period");
    return *r.f;
  };
  auto rate_at = [&](int k) -> double {
    const ObservableRecord& r = k == b.i1 ? last : traj.records[static_cast<std::size_t>(k)];
    return 4.0 * r.drive.real() * f_at(k);
  };

  // Interval integral of y over [k-1, k]: cubic through four neighbours
  // (one-sided at the period ends), trapezoid when the period is too short.
  auto interval = [&](const auto& y, int k, double h) {
    if (b.i1 - b.i0 < 3) return 0.5 * h * (y(k - 1) + y(k));
    if (k - 1 == b.i0) return h / 24.0 * (9.0 * y(k - 1) + 19.0 * y(k) - 5.0 * y(k + 1) + y(k + 2));
    if (k == b.i1) return h / 24.0 * (9.0 * y(k) + 19.0 * y(k - 1) - 5.0 * y(k - 2) + y(k - 3));
    return h / 24.0 * (-y(k - 2) + 13.0 * y(k - 1) + 13.0 * y(k) - y(k + 1));
  };

  double cum_f = 0.0, cum_rate = 0.0, lo = 0.0, hi = 0.0;
  rep.max_abs_f = std::abs(f_at(b.i0));
  for (int k = b.i0 + 1; k <= b.i1; ++k) {
    const double h = traj.records[static_cast<std::size_t>(k)].t -
                     traj.records[static_cast<std::size_t>(k - 1)].t;
    cum_f += 0.5 * h * (f_at(k - 1) + f_at(k));
    cum_rate += interval(rate_at, k, h);
    rep.max_abs_f = std::max(rep.max_abs_f, std::abs(f_at(k)));
    lo = std::min(lo, cum_f);
    hi = std::max(hi, cum_f);
    const double g2 = k == b.i1 ? rep.g2_end : require_g2(traj.records[static_cast<std::size_t>(k)]);
    rep.reconstruction_error =
        std::max(rep.reconstruction_error, std::abs(g2 - rep.g2_after - cum_rate));
  }
  rep.integral = cum_f;
  rep.end_deviation = std::abs(rep.g2_end - rep.g0);
  // Below this scale f is integrator noise around a stationary state.
  constexpr double kFlat = 1e-8;
  const bool flat = rep.max_abs_f < kFlat;
  rep.normalized_integral = flat ? 0.0 : std::abs(cum_f) / (rep.max_abs_f * T);
  const double tiny = 1e-12 * std::max(rep.max_abs_f * T, kFlat);
  rep.cumulative_changes_sign = !flat && lo < -tiny && hi > tiny;
  rep.integral_ok = rep.normalized_integral < 1e-3;
  rep.end_ok = rep.end_deviation < 1e-4;
  rep.reconstruction_ok = rep.reconstruction_error < 1e-3;
  return rep;
}

double period_to_period_difference(const Trajectory& traj, int period_index) {
  const PeriodBounds a = period_bounds(traj, period_index);
  const PeriodBounds b = period_bounds(traj, period_index + 1);
  if (b.i0 - a.i0 != a.i1 - a.i0) throw UnsupportedConfiguration("periods span different sample counts");
  double worst = 0.0;
  for (int k = 0; k < a.i1 - a.i0; ++k) {
    const auto& x = traj.records[static_cast<std::size_t>(a.i0 + k)];
    const auto& y = traj.records[static_cast<std::size_t>(b.i0 + k)];
    if (x.g2.has_value() != y.g2.has_value()) return std::numeric_limits<double>::infinity();
    if (x.g2) worst = std::max(worst, std::abs(*x.g2 - *y.g2));
  }
  return worst;
}

GaussianReport gaussian_robustness(const std::vector<double>& sigma_grid, const ScenarioConfig& base) {
  if (sigma_grid.empty()) throw InvalidArgument("sigma grid must be nonempty");
  for (double s : sigma_grid)
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("sigma grid must be positive");

  ScenarioConfig delta = base;
  delta.shape = PulseShape::Delta;
  delta.sigma = 0.0;
  delta.measured_periods = 1;
  const auto [ta, tb] = delta.window();

  GaussianReport rep;
  rep.g0 = conventional_g2(steady_state_direct(FockSpace(delta.dim), delta.mode, delta.P0));
  rep.delta_min_g2 = find_window_min(run_scenario(delta), ta, tb).g2_min;
  rep.below_g0_for_short_pulses = true;
  for (double s : sigma_grid) {
    ScenarioConfig c = delta;
    c.shape = PulseShape::Gaussian;
    c.sigma = s;
    const WindowMinimum m = find_window_min(run_scenario(c), ta, tb);
    rep.rows.push_back({s, m.g2_min, m.t_s});
    if (s <= 0.3 && !(m.g2_min < rep.g0)) rep.below_g0_for_short_pulses = false;
    if (std::abs(s - 0.05) < 1e-12)
      rep.narrow_relative_gap = std::abs(m.g2_min - rep.delta_min_g2) / std::abs(rep.delta_min_g2);
  }
  return rep;
}

namespace {

// Scalars that do not depend on where a flat g2 trace happens to be lowest.
std::vector<double> trace_scalars(const ScenarioConfig& c, const Trajectory& traj) {
  const auto [ta, tb] = c.window();
  std::vector<double> s;
  for (double frac : {0.25, 0.5, 0.75}) {
    const auto& r = traj.records[static_cast<std::size_t>(traj.index_at_or_after(ta + frac * (tb - ta)))];
    s.push_back(r.g2.value_or(0.0));
    s.push_back(r.n);
  }
  const bool both = c.P0 != Complex{0.0, 0.0} && c.P1 != Complex{0.0, 0.0};
  if (both) {
    const WindowMinimum m = find_window_min(traj, ta, tb);
    s.push_back(m.g2_min);
    s.push_back(m.n_at_min);
  }
  return s;
}

}  // namespace

ConvergenceReport scenario_convergence(const ScenarioConfig& config, std::vector<int> dims) {
  config.validate();
  if (dims.empty()) dims = config.dim_ladder;
  if (dims.empty()) dims = {config.dim - 5, config.dim};
  return convergence_check(dims, [&](int dim) {
    ScenarioConfig c = config;
    c.dim = dim;
    TruncationProbe probe;
    if (c.kind == ScenarioKind::TwoTime) {
      const Fig4Result r = run_two_time(c);
      probe.scalars = {r.minimum.g2_min, r.minimum.n_at_min};
      for (double dt : {-1.0, 0.0, 1.0}) {
        probe.scalars.push_back(r.combined.at(r.minimum.t_s + dt));
        probe.scalars.push_back(r.conventional.at(r.minimum.t_s + dt));
      }
      const Trajectory traj = run_scenario(c);
      probe.truncation_warning = traj.truncation_warning || traj.max_tail_population >= kTailLimit;
      return probe;
    }
    const Trajectory traj = run_scenario(c);
    probe.scalars = trace_scalars(c, traj);
    probe.truncation_warning = traj.truncation_warning || traj.max_tail_population >= kTailLimit;
    return probe;
  });
}

}  // namespace dynblock
