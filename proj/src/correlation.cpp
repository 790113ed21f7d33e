#include "dynblock/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynblock/errors.hpp"

namespace dynblock {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(double numerator, double n_t, double n_ts) {
  if (n_t < kOccupationFloor || n_ts < kOccupationFloor) return kNaN;
  return numerator / (n_t * n_ts);
}

double slack(double t) { return 1e-9 * std::max(1.0, std::abs(t)); }

// Forward branch: values for grid points >= t_s, written into `out` at the
// listed positions.
void forward_branch(const OperatorMatrix& rho_ts, const FockSpace& space,
                    const ModeParams& params, const DriveSchedule& schedule, double t_s,
                    const std::vector<double>& times, const std::vector<std::size_t>& slots,
                    const StepControl& control, TwoTimeResult& out) {
  if (times.empty()) return;
  const auto& a = space.annihilation();
  const Moments at_ts = moments(rho_ts);
  out.n_ts = at_ts.n;

  OperatorMatrix state = rho_ts;
  OperatorMatrix corr = a * rho_ts * a.adjoint();
  {
    Propagator prop(space, params, schedule, control);
    Propagator::Hooks hooks;
    hooks.on_sample = [&](int i, double, const OperatorMatrix& x) {
      out.n_t[slots[i]] = moments(x).n;
    };
    prop.run(state, t_s, times, hooks);
  }
  {
    Propagator prop(space, params, schedule, control);
    Propagator::Hooks hooks;
    hooks.on_sample = [&](int i, double, const OperatorMatrix& x) {
      // trace(a^dag a X): same diagonal sum as the occupation.
      out.numerator[slots[i]] = moments(x).n;
    };
    prop.run(corr, t_s, times, hooks);
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    const std::size_t k = slots[i];
    out.g2[k] = ratio(out.numerator[k], out.n_t[k], out.n_ts);
  }
}

TwoTimeResult make_result(double t_s, std::span<const double> t_grid) {
  TwoTimeResult r;
  r.t_s = t_s;
  r.t.assign(t_grid.begin(), t_grid.end());
  r.g2.assign(t_grid.size(), kNaN);
  r.numerator.assign(t_grid.size(), kNaN);
  r.n_t.assign(t_grid.size(), kNaN);
  if (!std::is_sorted(r.t.begin(), r.t.end())) throw InvalidArgument("t grid must be sorted");
  return r;
}

}  // namespace

double TwoTimeResult::at(double time) const {
  if (t.empty()) throw RangeError("empty two-time result");
  auto it = std::lower_bound(t.begin(), t.end(), time);
  std::size_t k = static_cast<std::size_t>(it - t.begin());
  if (k == t.size() || (k > 0 && time - t[k - 1] < t[k] - time)) k = k == 0 ? 0 : k - 1;
  return g2[k];
}

TwoTimeResult g2_two_time(const DensityMatrix& rho_ts, const ModeParams& params,
                          const DriveSchedule& schedule, double t_s,
                          std::span<const double> t_grid, double horizon,
                          const StepControl& control) {
  TwoTimeResult out = make_result(t_s, t_grid);
  for (double t : t_grid) {
    if (t < t_s - slack(t_s) || t > t_s + horizon + slack(t_s + horizon)) {
      throw RangeError("t=" + std::to_string(t) + " outside [t_s, t_s + horizon]");
    }
  }
  const FockSpace space(rho_ts.dim());
  std::vector<std::size_t> slots(t_grid.size());
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
  std::vector<double> times(t_grid.begin(), t_grid.end());
  for (double& t : times) t = std::max(t, t_s);
  forward_branch(rho_ts.matrix(), space, params, schedule, t_s, times, slots, control, out);
  return out;
}

TwoTimeResult g2_two_time_around(const DensityMatrix& rho_anchor, double t_anchor,
                                 const ModeParams& params, const DriveSchedule& schedule,
                                 double t_s, std::span<const double> t_grid,
                                 const StepControl& control) {
  TwoTimeResult out = make_result(t_s, t_grid);
  if (t_s < t_anchor - slack(t_anchor)) throw RangeError("t_s precedes the anchor time");
  for (double t : t_grid) {
    if (t < t_anchor - slack(t_anchor)) {
      throw RangeError("t=" + std::to_string(t) + " precedes the anchor time");
    }
  }
  const FockSpace space(rho_anchor.dim());
  const auto& a = space.annihilation();

  // Physical states at every earlier grid point and at t_s.
  std::vector<double> early_times;
  std::vector<std::size_t> early_slots, late_slots;
  std::vector<double> late_times;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < t_s - slack(t_s)) {
      early_times.push_back(std::max(t_grid[i], t_anchor));
      early_slots.push_back(i);
    } else {
      late_times.push_back(std::max(t_grid[i], t_s));
      late_slots.push_back(i);
    }
  }
  std::vector<OperatorMatrix> early_states(early_times.size());
  std::vector<double> path = early_times;
  path.push_back(std::max(t_s, t_anchor));
  OperatorMatrix rho_ts;
  {
    OperatorMatrix state = rho_anchor.matrix();
    Propagator prop(space, params, schedule, control);
    Propagator::Hooks hooks;
    hooks.on_sample = [&](int i, double, const OperatorMatrix& x) {
      if (static_cast<std::size_t>(i) < early_states.size()) {
        early_states[i] = x;
      } else {
        rho_ts = x;
      }
    };
    prop.run(state, t_anchor, path, hooks);
  }

  forward_branch(rho_ts, space, params, schedule, t_s, late_times, late_slots, control, out);
  out.n_ts = moments(rho_ts).n;

  for (std::size_t j = 0; j < early_times.size(); ++j) {
    const std::size_t k = early_slots[j];
    out.n_t[k] = moments(early_states[j]).n;
    OperatorMatrix corr = a * early_states[j] * a.adjoint();
    Propagator prop(space, params, schedule, control);
    const double stop[] = {t_s};
    prop.run(corr, early_times[j], stop, {});
    out.numerator[k] = moments(corr).n;
    out.g2[k] = ratio(out.numerator[k], out.n_t[k], out.n_ts);
  }
  return out;
}

}  // namespace dynblock
