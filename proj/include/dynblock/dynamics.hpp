#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynblock/integrator.hpp"
#include "dynblock/model.hpp"
#include "dynblock/observables.hpp"
#include "dynblock/state.hpp"

namespace dynblock {

// H = E n + alpha a^dag a^dag a a + P a^dag + P* a
OperatorMatrix hamiltonian(const FockSpace& space, const ModeParams& params, Complex P);

// Dense reference generator: -i[H, rho] + a rho a^dag - (n rho + rho n)/2.
OperatorMatrix lindblad_rhs(const OperatorMatrix& rho, const OperatorMatrix& H);
OperatorMatrix lindblad_rhs(const DensityMatrix& rho, const OperatorMatrix& H);

// Column-major vectorized generator, vec(L(x)) = L vec(x), assembled from
// Kronecker products. Size dim^2 x dim^2.
Eigen::MatrixXcd vectorized_generator(const FockSpace& space, const ModeParams& params, Complex P);

// The same generator applied entry by entry, exploiting that H is tridiagonal
// and a is a single off-diagonal. O(dim^2) per application. Linear in its
// argument, so it also propagates non-Hermitian regression operators.
class Liouvillian {
 public:
  Liouvillian(int dim, const ModeParams& params);

  void apply(const OperatorMatrix& x, Complex drive, OperatorMatrix& out) const;
  int dim() const noexcept { return dim_; }

 private:
  int dim_;
  std::vector<double> energy_;  // E m + alpha m (m-1)
  std::vector<double> root_;    // sqrt(m)
};

struct PulseOutcome {
  DensityMatrix state;
  double tail_population = 0.0;
  bool truncation_warning = false;
};

inline constexpr double kTailLimit = 1e-8;

// rho -> D rho D^dag with D = D(-i P1). The warning is raised when the two top
// Fock levels end up holding kTailLimit or more.
PulseOutcome apply_delta_pulse(const DensityMatrix& rho, Complex P1, const FockSpace& space);

// Operator form of the pulse, for regression operators.
OperatorMatrix displace_operator(const OperatorMatrix& x, Complex P1, const FockSpace& space);

// Integrates an arbitrary operator under the Lindblad flow of a schedule.
// Gaussian pulses live in the smooth drive; delta pulses are applied as
// displacement sandwiches at their instants.
class Propagator {
 public:
  Propagator(const FockSpace& space, const ModeParams& params, const DriveSchedule& schedule,
             const StepControl& control = {});
  Propagator(const Propagator&) = delete;
  Propagator& operator=(const Propagator&) = delete;

  struct Hooks {
    // Called at each requested time with the operator there (post-pulse if a
    // delta pulse coincides with it).
    std::function<void(int index, double t, const OperatorMatrix& x)> on_sample;
    // Called around each delta pulse with pre- and post-pulse operators.
    std::function<void(const PulseEvent&, const OperatorMatrix& pre, const OperatorMatrix& post,
                       int sample_index)>
        on_pulse;
  };

  // Evolves x from t0 through every time in `times` (non-decreasing, >= t0).
  // Delta pulses in (t0, times.back()] are applied, plus those at t0 when
  // include_pulses_at_start is set.
  void run(OperatorMatrix& x, double t0, std::span<const double> times, const Hooks& hooks,
           bool include_pulses_at_start = false);

  const StepStats& stats() const { return stepper_.stats(); }
  const FockSpace& space() const { return space_; }

 private:
  void flow(OperatorMatrix& x, double& t, double t1);

  FockSpace space_;
  DriveSchedule schedule_;
  Liouvillian generator_;
  Dopri5 stepper_;
  std::vector<double> breakpoints_;
  std::vector<const PulseEvent*> deltas_;
};

struct EvolveOptions {
  double t0 = 0.0;
  StepControl step;
  StateTolerances tolerances;
  bool check_invariants = true;
  int positivity_stride = 50;  // eigenvalue check on every n-th sample
  bool keep_final_state = true;
};

// Samples the master-equation evolution on t0, t0 + dt, ... <= t_end.
// Throws IntegratorFailure when the state leaves the admissible set.
Trajectory evolve(const DensityMatrix& rho0, const ModeParams& params,
                  const DriveSchedule& schedule, double t_end, double sample_dt,
                  const EvolveOptions& options = {});

// Evolves without recording; returns the state at t1.
DensityMatrix evolve_state(const DensityMatrix& rho, const ModeParams& params,
                           const DriveSchedule& schedule, double t0, double t1,
                           const StepControl& control = {}, bool include_pulses_at_start = false);

// Null vector of the vectorized generator with the trace condition replacing
// one row. Throws DegenerateSteadyState if that system is singular.
DensityMatrix steady_state_direct(const FockSpace& space, const ModeParams& params, Complex P0);

struct SteadyStateEvolutionOptions {
  double check_interval = 1.0;
  double time_cap = 5000.0;
  StepControl step;
};

// Evolves from vacuum until two states check_interval apart differ by less
// than tol in trace distance.
DensityMatrix steady_state_by_evolution(const FockSpace& space, const ModeParams& params,
                                        Complex P0, double tol,
                                        const SteadyStateEvolutionOptions& options = {});

// Scalars a scenario produces at one truncation, plus whether it ran out of
// headroom.
struct TruncationProbe {
  std::vector<double> scalars;
  bool truncation_warning = false;
};

struct ConvergenceReport {
  std::vector<int> dims;
  std::vector<std::vector<double>> scalars;  // per dim
  std::vector<double> differences;           // max |Δ| between successive dims
  std::vector<bool> warnings;                // per dim
  bool truncation_warning = false;           // any dim
  bool passed = false;  // last difference < tolerance

  // Passed, and neither of the two compared truncations ran out of headroom.
  bool ok() const {
    const std::size_t n = warnings.size();
    return passed && (n < 2 || (!warnings[n - 1] && !warnings[n - 2]));
  }
};

ConvergenceReport convergence_check(const std::vector<int>& dims,
                                    const std::function<TruncationProbe(int dim)>& scenario,
                                    double tolerance = 1e-6);

}  // namespace dynblock
