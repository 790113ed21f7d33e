#include "dynblock/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynblock/errors.hpp"

namespace dynblock {

Moments moments(const OperatorMatrix& rho) {
  Moments m;
  const int d = static_cast<int>(rho.rows());
  for (int k = 0; k < d; ++k) {
    const double p = rho(k, k).real();
    m.n += k * p;
    m.pairs += static_cast<double>(k) * (k - 1) * p;
  }
  // a_{k,k+1} = sqrt(k+1); (a^dag a a)_{k,k+1} = k sqrt(k+1)
  for (int k = 0; k + 1 < d; ++k) {
    const double s = std::sqrt(static_cast<double>(k + 1));
    m.psi += s * rho(k + 1, k);
    m.C += k * s * rho(k + 1, k);
  }
  return m;
}

std::optional<double> g2_equal(const Moments& m) {
  if (m.n < kOccupationFloor) return std::nullopt;
  return m.pairs / (m.n * m.n);
}

std::optional<double> g2_equal(const DensityMatrix& rho) { return g2_equal(moments(rho.matrix())); }

std::optional<double> f_of_state(const Moments& m) {
  const auto g2 = g2_equal(m);
  if (!g2) return std::nullopt;
  return (*g2 * m.n * m.psi.imag() - m.C.imag()) / (m.n * m.n);
}

std::optional<double> f_of_state(const DensityMatrix& rho) {
  return f_of_state(moments(rho.matrix()));
}

ObservableRecord measure(const OperatorMatrix& rho, double t) {
  const Moments m = moments(rho);
  ObservableRecord r;
  r.t = t;
  r.n = m.n;
  r.psi = m.psi;
  r.C = m.C;
  r.g2 = g2_equal(m);
  r.f = f_of_state(m);
  return r;
}

std::vector<double> Trajectory::times() const {
  std::vector<double> t;
  t.reserve(records.size());
  for (const auto& r : records) t.push_back(r.t);
  return t;
}

int Trajectory::index_at_or_after(double time) const {
  const double slack = 1e-9 * sample_dt;
  auto it = std::lower_bound(records.begin(), records.end(), time - slack,
                             [](const ObservableRecord& r, double v) { return r.t < v; });
  return static_cast<int>(it - records.begin());
}

WindowMinimum find_window_min(const Trajectory& traj, double t_a, double t_b) {
  if (traj.records.empty() || t_b < t_a || t_a < traj.records.front().t - 1e-9 ||
      t_b > traj.records.back().t + 1e-9 * std::max(1.0, t_b)) {
    throw RangeError("window [" + std::to_string(t_a) + ", " + std::to_string(t_b) +
                     "] is not inside the trajectory");
  }
  WindowMinimum best;
  const double slack = 1e-9 * std::max(traj.sample_dt, 1e-300);
  for (int k = traj.index_at_or_after(t_a); k < static_cast<int>(traj.records.size()); ++k) {
    const auto& r = traj.records[k];
    if (r.t > t_b + slack) break;
    if (!r.g2) continue;
    if (best.index < 0 || *r.g2 < best.g2_min) {
      best = {r.t, *r.g2, r.n, k};
    }
  }
  if (best.index < 0) throw EmptyWindow("no defined g2 sample inside the window");
  return best;
}

RateLawReport validate_rate_law(const Trajectory& traj, const RateLawOptions& opts) {
  if (!traj.schedule.is_real()) {
    throw UnsupportedConfiguration("rate-law validation requires a real drive");
  }
  if (opts.stencil_order != 2 && opts.stencil_order != 4) {
    throw InvalidArgument("stencil order must be 2 or 4");
  }
  const auto& rec = traj.records;
  const int count = static_cast<int>(rec.size());
  const int reach = opts.stencil_order / 2;

  // The grid sample at a pulse holds the post-pulse state, so a stencil
  // centred at k is valid when it lies entirely on one side: k - reach >= p
  // or k + reach < p.
  std::vector<bool> skip(count, false);
  for (const auto& pulse : traj.schedule.pulses) {
    const int p = traj.index_at_or_after(pulse.time);
    for (int k = p - reach; k < p + reach; ++k) {
      if (k >= 0 && k < count) skip[k] = true;
    }
  }

  const double t_begin = opts.t_begin.value_or(
      traj.schedule.pulses.empty() ? rec.front().t : traj.schedule.pulses.front().time);
  const double t_end = opts.t_end.value_or(rec.back().t);
  const double floor = opts.occupation_factor * kOccupationFloor;
  const double h = traj.sample_dt;

  RateLawReport report;
  for (int k = reach; k + reach < count; ++k) {
    if (skip[k]) continue;
    const auto& r = rec[k];
    if (r.t < t_begin - 1e-12 || r.t > t_end + 1e-12) continue;
    bool usable = r.f.has_value();
    for (int j = k - reach; j <= k + reach && usable; ++j) {
      usable = rec[j].g2.has_value() && rec[j].n > floor;
    }
    if (!usable) continue;
    const double derivative =
        reach == 1 ? (*rec[k + 1].g2 - *rec[k - 1].g2) / (2.0 * h)
                   : (-*rec[k + 2].g2 + 8.0 * *rec[k + 1].g2 - 8.0 * *rec[k - 1].g2 +
                      *rec[k - 2].g2) / (12.0 * h);
    const double prediction = 4.0 * r.drive.real() * *r.f;
    report.samples++;
    report.max_abs_residual = std::max(report.max_abs_residual, std::abs(derivative - prediction));
    report.max_abs_prediction = std::max(report.max_abs_prediction, std::abs(prediction));
    report.max_abs_derivative = std::max(report.max_abs_derivative, std::abs(derivative));
  }
  report.max_relative_error = report.max_abs_prediction > 0.0
                                  ? report.max_abs_residual / report.max_abs_prediction
                                  : report.max_abs_residual;
  return report;
}

}  // namespace dynblock
