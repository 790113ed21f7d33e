#include "dynblock/checks.hpp"

#include <cmath>
#include <sstream>

#include "dynblock/errors.hpp"

namespace dynblock {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

void apply(const CheckSettings& cs, ScenarioConfig& c) {
  c.step = cs.step;
  if (cs.dim) c.dim = *cs.dim;
}

CheckResult check_coherent(const CheckSettings& cs) {
  ScenarioConfig c = ScenarioConfig::fig1(Fig1Variant::Combined);
  apply(cs, c);
  const LinearModeReport r = linear_mode_report(c);
  CheckResult out{"coherent", false, r.max_g2_deviation, 1e-6, ""};
  out.passed = r.samples > 0 && r.max_g2_deviation < 1e-6 && r.min_purity > 1.0 - 1e-8;
  out.detail = "max|g2-1| " + fmt(r.max_g2_deviation) + ", min purity deficit " +
               fmt(1.0 - r.min_purity) + " over " + std::to_string(r.samples) + " samples";
  return out;
}

CheckResult check_steady(const CheckSettings& cs) {
  // Linear mode: psi = -P0 / (E - i/2), n = |psi|^2.
  const ModeParams linear{2.0, 0.0};
  const Complex P0{0.5, 0.0};
  const DensityMatrix ss = steady_state_direct(FockSpace(cs.dim.value_or(25)), linear, P0);
  const Moments m = moments(ss.matrix());
  const double dn = std::abs(m.n - 0.25 / 4.25);
  const double dpsi = std::abs(m.psi - (-P0 / Complex(2.0, -0.5)));

  double worst = 0.0;
  ScenarioConfig strong = ScenarioConfig::fig3();
  ScenarioConfig weak = ScenarioConfig::fig1();
  apply(cs, strong);
  apply(cs, weak);
  for (const ScenarioConfig* c : {&strong, &weak}) {
    const SteadyComparison cmp = compare_steady_states(c->dim, c->mode, c->P0, 1e-8, c->step);
    worst = std::max(worst, cmp.trace_distance);
  }
  CheckResult out{"steady", false, worst, 1e-7, ""};
  out.passed = dn < 1e-8 && dpsi < 1e-8 && worst < 1e-7;
  out.detail = "analytic |dn| " + fmt(dn) + ", |dpsi| " + fmt(dpsi) +
               "; direct vs evolution trace distance " + fmt(worst);
  return out;
}

CheckResult check_eq4(const CheckSettings& cs) {
  ScenarioConfig c = ScenarioConfig::fig1(Fig1Variant::Combined);
  apply(cs, c);
  const RateLawReport r = validate_rate_law(run_scenario(c));
  CheckResult out{"eq4", false, r.max_relative_error, 1e-3, ""};
  out.passed = r.samples > 0 && r.max_relative_error < 1e-3;
  out.detail = "relative residual " + fmt(r.max_relative_error) + " over " +
               std::to_string(r.samples) + " samples";
  return out;
}

CheckResult check_eq6(const CheckSettings& cs) {
  ScenarioConfig c = ScenarioConfig::fig1(Fig1Variant::Combined);
  apply(cs, c);
  const Trajectory traj = run_scenario(c);
  const Eq6Report r = check_eq6_cycle(traj, c.warmup_periods);
  const double periodic = period_to_period_difference(traj, c.warmup_periods);
  CheckResult out{"eq6", false, r.normalized_integral, 1e-3, ""};
  out.passed = r.passed() && r.cumulative_changes_sign && periodic < 1e-5;
  out.detail = "normalized integral " + fmt(r.normalized_integral) + ", reconstruction " +
               fmt(r.reconstruction_error) + ", end deviation " + fmt(r.end_deviation) +
               (r.cumulative_changes_sign ? ", sign change" : ", no sign change") +
               ", period-to-period " + fmt(periodic);
  return out;
}

CheckResult check_convergence(const CheckSettings& cs) {
  ScenarioConfig a = ScenarioConfig::fig1(Fig1Variant::Combined);
  ScenarioConfig b = ScenarioConfig::fig3();
  a.step = cs.step;
  b.step = cs.step;
  double worst = 0.0;
  bool ok = true;
  std::string detail;
  for (const ScenarioConfig* c : {&a, &b}) {
    const ConvergenceReport r = scenario_convergence(*c);
    const double last = r.differences.empty() ? 0.0 : r.differences.back();
    worst = std::max(worst, last);
    ok = ok && r.ok();
    detail += (detail.empty() ? "" : ", ") + c->name + " " + fmt(last) +
              (r.truncation_warning ? " (truncation warning)" : "");
  }
  return {"convergence", ok, worst, 1e-6, detail};
}

}  // namespace

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"coherent", "steady", "eq4", "eq6", "convergence"};
  return names;
}

CheckResult run_check(const std::string& name, const CheckSettings& settings) {
  try {
    if (name == "coherent") return check_coherent(settings);
    if (name == "steady") return check_steady(settings);
    if (name == "eq4") return check_eq4(settings);
    if (name == "eq6") return check_eq6(settings);
    if (name == "convergence") return check_convergence(settings);
  } catch (const Error& e) {
    return {name, false, std::nan(""), 0.0, std::string(e.kind()) + ": " + e.what()};
  }
  throw InvalidArgument("unknown check '" + name + "'");
}

LinearModeReport linear_mode_report(ScenarioConfig config) {
  config.mode.alpha = 0.0;
  config.validate();
  const FockSpace space(config.dim);
  const double horizon = config.horizon();
  const auto steps = static_cast<long>(std::floor(horizon / config.sample_dt + 1e-9));
  std::vector<double> times(static_cast<std::size_t>(steps + 1));
  for (long k = 0; k <= steps; ++k) times[static_cast<std::size_t>(k)] = k * config.sample_dt;

  LinearModeReport r;
  auto inspect = [&r](const OperatorMatrix& x) {
    const DensityMatrix view = DensityMatrix::unchecked(x);
    r.min_purity = std::min(r.min_purity, view.purity());
    if (const auto g2 = g2_equal(view)) {
      r.max_g2_deviation = std::max(r.max_g2_deviation, std::abs(*g2 - 1.0));
      ++r.samples;
    }
  };
  Propagator::Hooks hooks;
  hooks.on_sample = [&](int, double, const OperatorMatrix& x) { inspect(x); };
  hooks.on_pulse = [&](const PulseEvent&, const OperatorMatrix& pre, const OperatorMatrix&, int) {
    inspect(pre);
  };
  OperatorMatrix x = DensityMatrix::vacuum(space).matrix();
  Propagator prop(space, config.mode, config.schedule(), config.step);
  prop.run(x, 0.0, times, hooks, true);
  return r;
}

SteadyComparison compare_steady_states(int dim, const ModeParams& params, Complex P0, double tol,
                                       const StepControl& step) {
  const FockSpace space(dim);
  const DensityMatrix direct = steady_state_direct(space, params, P0);
  SteadyStateEvolutionOptions opts;
  opts.step = step;
  const DensityMatrix evolved = steady_state_by_evolution(space, params, P0, tol, opts);
  return {trace_distance(direct, evolved), direct.tail_population()};
}

}  // namespace dynblock
