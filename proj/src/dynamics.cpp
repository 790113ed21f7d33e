#include "dynblock/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynblock/errors.hpp"

namespace dynblock {

namespace {

void require_finite(Complex z, const char* what) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw InvalidArgument(std::string(what) + " must be finite");
  }
}

Eigen::MatrixXcd kron(const OperatorMatrix& A, const OperatorMatrix& B) {
  const Eigen::Index ra = A.rows(), ca = A.cols(), rb = B.rows(), cb = B.cols();
  Eigen::MatrixXcd out(ra * rb, ca * cb);
  for (Eigen::Index i = 0; i < ra; ++i)
    for (Eigen::Index j = 0; j < ca; ++j) out.block(i * rb, j * cb, rb, cb) = A(i, j) * B;
  return out;
}

}  // namespace

OperatorMatrix hamiltonian(const FockSpace& space, const ModeParams& params, Complex P) {
  params.validate();
  require_finite(P, "drive amplitude");
  return params.E * space.number() + params.alpha * space.kerr() + P * space.creation() +
         std::conj(P) * space.annihilation();
}

OperatorMatrix lindblad_rhs(const OperatorMatrix& rho, const OperatorMatrix& H) {
  if (rho.rows() != H.rows() || rho.cols() != H.cols() || rho.rows() != rho.cols()) {
    throw InvalidArgument("lindblad_rhs: state and Hamiltonian dimensions differ");
  }
  const FockSpace space(static_cast<int>(rho.rows()));
  const auto& a = space.annihilation();
  const auto& n = space.number();
  return -kI * (H * rho - rho * H) + a * rho * a.adjoint() - 0.5 * (n * rho + rho * n);
}

OperatorMatrix lindblad_rhs(const DensityMatrix& rho, const OperatorMatrix& H) {
  return lindblad_rhs(rho.matrix(), H);
}

Eigen::MatrixXcd vectorized_generator(const FockSpace& space, const ModeParams& params,
                                      Complex P) {
  // vec(A X B) = (B^T kron A) vec(X) for column-major vec.
  const OperatorMatrix H = hamiltonian(space, params, P);
  const OperatorMatrix I = space.identity();
  const auto& a = space.annihilation();
  const auto& n = space.number();
  return -kI * (kron(I, H) - kron(H.transpose(), I)) + kron(a.conjugate(), a) -
         0.5 * (kron(I, n) + kron(n.transpose(), I));
}

Liouvillian::Liouvillian(int dim, const ModeParams& params)
    : dim_(dim), energy_(dim + 1), root_(dim + 1) {
  params.validate();
  for (int m = 0; m <= dim; ++m) {
    energy_[m] = params.E * m + params.alpha * m * (m - 1.0);
    root_[m] = std::sqrt(static_cast<double>(m));
  }
}

void Liouvillian::apply(const OperatorMatrix& x, Complex drive, OperatorMatrix& out) const {
  const int d = dim_;
  out.resize(d, d);
  const Complex P = drive;
  const Complex Pc = std::conj(drive);
  const Complex* xp = x.data();
  Complex* op = out.data();
  // Column-major: x(m, n) = xp[m + n d].
  for (int n = 0; n < d; ++n) {
    const Complex* col = xp + static_cast<std::ptrdiff_t>(n) * d;
    const Complex* left = n > 0 ? col - d : nullptr;       // column n-1
    const Complex* right = n + 1 < d ? col + d : nullptr;  // column n+1
    for (int m = 0; m < d; ++m) {
      const Complex xmn = col[m];
      // [H, x]_{mn}
      Complex comm = (energy_[m] - energy_[n]) * xmn;
      if (m > 0) comm += P * root_[m] * col[m - 1];
      if (m + 1 < d) comm += Pc * root_[m + 1] * col[m + 1];
      if (right) comm -= P * root_[n + 1] * right[m];
      if (left) comm -= Pc * root_[n] * left[m];
      Complex value = Complex(comm.imag(), -comm.real());  // -i * comm
      if (right && m + 1 < d) value += root_[m + 1] * root_[n + 1] * right[m + 1];
      value -= 0.5 * (m + n) * xmn;
      op[m + static_cast<std::ptrdiff_t>(n) * d] = value;
    }
  }
}

OperatorMatrix displace_operator(const OperatorMatrix& x, Complex P1, const FockSpace& space) {
  const OperatorMatrix D = displacement(space, -kI * P1);
  return D * x * D.adjoint();
}

PulseOutcome apply_delta_pulse(const DensityMatrix& rho, Complex P1, const FockSpace& space) {
  require_finite(P1, "pulse area");
  if (rho.dim() != space.dim()) throw InvalidArgument("apply_delta_pulse: dimension mismatch");
  if (P1 == Complex{0.0, 0.0}) {
    return {rho, rho.tail_population(), rho.tail_population() >= kTailLimit};
  }
  DensityMatrix out = DensityMatrix::unchecked(displace_operator(rho.matrix(), P1, space));
  const double tail = out.tail_population();
  return {std::move(out), tail, tail >= kTailLimit};
}

// ---------------------------------------------------------------------------
// Propagator

Propagator::Propagator(const FockSpace& space, const ModeParams& params,
                       const DriveSchedule& schedule, const StepControl& control)
    : space_(space),
      schedule_(schedule),
      generator_(space.dim(), params),
      stepper_(
          [this](double t, const OperatorMatrix& x, OperatorMatrix& dx) {
            generator_.apply(x, schedule_.amplitude(t), dx);
          },
          control) {
  schedule_.validate();
  for (const auto& p : schedule_.pulses) {
    if (p.shape == PulseShape::Delta) {
      deltas_.push_back(&p);
    } else {
      breakpoints_.insert(breakpoints_.end(), {p.support_begin(), p.time, p.support_end()});
    }
  }
  std::sort(breakpoints_.begin(), breakpoints_.end());
}

void Propagator::flow(OperatorMatrix& x, double& t, double t1) {
  const double base_max = stepper_.control().max_step;
  while (t < t1) {
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    const double stop = (it != breakpoints_.end() && *it < t1) ? *it : t1;
    // Keep several steps inside any Gaussian whose support we are crossing.
    double cap = base_max;
    const double mid = 0.5 * (t + stop);
    for (const auto& p : schedule_.pulses) {
      if (p.shape == PulseShape::Gaussian && mid > p.support_begin() && mid < p.support_end()) {
        cap = std::min(cap, 0.5 * p.sigma);
      }
    }
    stepper_.set_max_step(cap);
    stepper_.advance(x, t, stop);
    stepper_.set_max_step(base_max);
    if (stop < t1 || (it != breakpoints_.end() && *it == t1)) stepper_.invalidate();
  }
}

void Propagator::run(OperatorMatrix& x, double t0, std::span<const double> times,
                     const Hooks& hooks, bool include_pulses_at_start) {
  if (x.rows() != space_.dim() || x.cols() != space_.dim()) {
    throw InvalidArgument("Propagator: operator dimension does not match the space");
  }
  auto slack = [](double t) { return 1e-9 * std::max(1.0, std::abs(t)); };

  std::size_t next = 0;
  while (next < deltas_.size()) {
    const double pt = deltas_[next]->time;
    const bool before = include_pulses_at_start ? pt < t0 - slack(t0) : pt <= t0 + slack(t0);
    if (!before) break;
    ++next;
  }

  double t = t0;
  stepper_.invalidate();
  auto kick = [&](const PulseEvent& pulse, int sample_index) {
    if (pulse.area == Complex{0.0, 0.0}) {
      if (hooks.on_pulse) hooks.on_pulse(pulse, x, x, sample_index);
      return;
    }
    const OperatorMatrix D = displacement(space_, -kI * pulse.area);
    OperatorMatrix post = D * x * D.adjoint();
    if (hooks.on_pulse) hooks.on_pulse(pulse, x, post, sample_index);
    x.swap(post);
    stepper_.invalidate();
  };

  for (std::size_t i = 0; i < times.size(); ++i) {
    const double target = times[i];
    if (target < t - slack(t)) throw InvalidArgument("Propagator: sample times must not decrease");
    while (next < deltas_.size() && deltas_[next]->time <= target + slack(target)) {
      const PulseEvent& pulse = *deltas_[next];
      const bool on_sample = std::abs(pulse.time - target) <= slack(target);
      flow(x, t, on_sample ? target : pulse.time);
      kick(pulse, on_sample ? static_cast<int>(i) : -1);
      ++next;
    }
    if (target > t) flow(x, t, target);
    if (hooks.on_sample) hooks.on_sample(static_cast<int>(i), target, x);
  }
}

// ---------------------------------------------------------------------------
// evolve

Trajectory evolve(const DensityMatrix& rho0, const ModeParams& params,
                  const DriveSchedule& schedule, double t_end, double sample_dt,
                  const EvolveOptions& options) {
  params.validate();
  schedule.validate();
  if (!(sample_dt > 0.0)) throw InvalidArgument("sample_dt must be > 0");
  if (!(t_end > options.t0)) throw InvalidArgument("t_end must exceed the start time");

  const FockSpace space(rho0.dim());
  const auto steps = static_cast<long>(std::floor((t_end - options.t0) / sample_dt + 1e-9));
  std::vector<double> times(steps + 1);
  for (long k = 0; k <= steps; ++k) times[k] = options.t0 + k * sample_dt;

  Trajectory traj;
  traj.dim = space.dim();
  traj.params = params;
  traj.schedule = schedule;
  traj.sample_dt = sample_dt;
  traj.records.resize(times.size());

  auto note_tail = [&traj](const OperatorMatrix& x) {
    const int d = static_cast<int>(x.rows());
    const double tail = x(d - 1, d - 1).real() + x(d - 2, d - 2).real();
    traj.max_tail_population = std::max(traj.max_tail_population, tail);
    if (tail >= kTailLimit) traj.truncation_warning = true;
  };

  std::vector<char> pulse_at(times.size(), 0);
  Propagator::Hooks hooks;
  hooks.on_pulse = [&](const PulseEvent& pulse, const OperatorMatrix& pre,
                       const OperatorMatrix& post, int index) {
    PulseSnapshot snap;
    snap.grid_index = index;
    snap.pre = measure(pre, index >= 0 ? times[index] : pulse.time);
    snap.pre.drive = schedule.amplitude(snap.pre.t);
    snap.pre.pre_pulse = true;
    snap.post = measure(post, snap.pre.t);
    snap.post.drive = snap.pre.drive;
    snap.post.pulse = true;
    traj.pulse_records.push_back(snap);
    if (index >= 0) pulse_at[index] = 1;
    note_tail(post);
  };
  const auto& tol = options.tolerances;
  hooks.on_sample = [&](int index, double t, const OperatorMatrix& x) {
    ObservableRecord r = measure(x, t);
    r.drive = schedule.amplitude(t);
    r.pulse = pulse_at[index] != 0;
    traj.records[index] = r;
    note_tail(x);
    if (!options.check_invariants) return;
    const DensityMatrix view = DensityMatrix::unchecked(x);
    if (view.trace_error() > tol.trace) {
      throw IntegratorFailure(t, "trace drifted by " + std::to_string(view.trace_error()));
    }
    if (view.hermiticity_error() > tol.hermiticity) {
      throw IntegratorFailure(t, "Hermiticity lost (" + std::to_string(view.hermiticity_error()) + ")");
    }
    if (options.positivity_stride > 0 && index % options.positivity_stride == 0) {
      const double lowest = view.min_eigenvalue();
      if (lowest < -tol.positivity) {
        throw IntegratorFailure(t, "negative eigenvalue " + std::to_string(lowest));
      }
    }
  };

  OperatorMatrix x = rho0.matrix();
  Propagator prop(space, params, schedule, options.step);
  prop.run(x, options.t0, times, hooks, /*include_pulses_at_start=*/true);
  if (options.keep_final_state) traj.final_state = DensityMatrix::unchecked(std::move(x));
  return traj;
}

DensityMatrix evolve_state(const DensityMatrix& rho, const ModeParams& params,
                           const DriveSchedule& schedule, double t0, double t1,
                           const StepControl& control, bool include_pulses_at_start) {
  if (t1 < t0) throw InvalidArgument("evolve_state: t1 < t0");
  const FockSpace space(rho.dim());
  OperatorMatrix x = rho.matrix();
  Propagator prop(space, params, schedule, control);
  const double times[] = {t1};
  prop.run(x, t0, times, {}, include_pulses_at_start);
  return DensityMatrix::unchecked(std::move(x));
}

// ---------------------------------------------------------------------------
// Steady states

DensityMatrix steady_state_direct(const FockSpace& space, const ModeParams& params, Complex P0) {
  require_finite(P0, "P0");
  const int d = space.dim();
  Eigen::MatrixXcd L = vectorized_generator(space, params, P0);
  // Rows belonging to diagonal entries sum to zero (trace preservation), so
  // the (0,0) row can carry the normalization instead.
  L.row(0).setZero();
  for (int i = 0; i < d; ++i) L(0, i + i * d) = 1.0;
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(d * d);
  rhs(0) = 1.0;

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(L);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw DegenerateSteadyState("steady-state system is singular (rcond=" +
                                std::to_string(rcond) + ")");
  }
  const Eigen::VectorXcd v = lu.solve(rhs);
  OperatorMatrix rho = Eigen::Map<const OperatorMatrix>(v.data(), d, d);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace();
  return DensityMatrix::from_matrix(std::move(rho));
}

DensityMatrix steady_state_by_evolution(const FockSpace& space, const ModeParams& params,
                                        Complex P0, double tol,
                                        const SteadyStateEvolutionOptions& options) {
  if (!(tol > 0.0)) throw InvalidArgument("steady_state_by_evolution: tol must be > 0");
  require_finite(P0, "P0");
  const DriveSchedule drive = DriveSchedule::continuous(P0);
  OperatorMatrix x = DensityMatrix::vacuum(space).matrix();

  Liouvillian generator(space.dim(), params);
  OperatorMatrix probe;
  generator.apply(x, P0, probe);
  if (probe.cwiseAbs().maxCoeff() == 0.0) return DensityMatrix::unchecked(std::move(x));

  Propagator prop(space, params, drive, options.step);
  double t = 0.0;
  while (t < options.time_cap) {
    OperatorMatrix previous = x;
    const double next[] = {t + options.check_interval};
    prop.run(x, t, next, {});
    t = next[0];
    if (trace_distance(previous, x) < tol) {
      x = 0.5 * (x + x.adjoint()).eval();
      return DensityMatrix::unchecked(std::move(x));
    }
  }
  throw ConvergenceFailure("no steady state within t=" + std::to_string(options.time_cap));
}

// ---------------------------------------------------------------------------

ConvergenceReport convergence_check(const std::vector<int>& dims,
                                    const std::function<TruncationProbe(int dim)>& scenario,
                                    double tolerance) {
  if (dims.size() < 2) throw InvalidArgument("convergence ladder needs at least two dims");
  ConvergenceReport report;
  report.dims = dims;
  for (int d : dims) {
    TruncationProbe probe = scenario(d);
    report.warnings.push_back(probe.truncation_warning);
    report.truncation_warning = report.truncation_warning || probe.truncation_warning;
    if (!report.scalars.empty()) {
      const auto& prev = report.scalars.back();
      if (prev.size() != probe.scalars.size()) {
        throw InvalidArgument("scenario returned a different number of scalars per dim");
      }
      double diff = 0.0;
      for (std::size_t i = 0; i < prev.size(); ++i) {
        diff = std::max(diff, std::abs(prev[i] - probe.scalars[i]));
      }
      report.differences.push_back(diff);
    }
    report.scalars.push_back(std::move(probe.scalars));
  }
  report.passed = report.differences.back() < tolerance;
  return report;
}

}  // namespace dynblock
