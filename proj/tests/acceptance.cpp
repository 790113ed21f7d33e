// Prints one PASS/FAIL line per acceptance criterion. Exit status is nonzero
// when a criterion fails that is not listed with --expected-fail.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dynblock/checks.hpp"
#include "dynblock/experiments.hpp"
#include "oracles.hpp"

using namespace dynblock;
using dynblock::testing::displacement_series;
using dynblock::testing::exp_pade;
using dynblock::testing::max_abs;

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

unsigned g_jobs = 0;

template <class F>
void parallel_for(std::size_t n, F&& body) {
  unsigned jobs = g_jobs ? g_jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;) body(k);
  };
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

const Trajectory& fig1_trace(Fig1Variant v) {
  static const Trajectory combined = run_fig1(Fig1Variant::Combined);
  static const Trajectory continuous = run_fig1(Fig1Variant::Continuous);
  static const Trajectory pulses = run_fig1(Fig1Variant::PulsesOnly);
  return v == Fig1Variant::Combined ? combined : v == Fig1Variant::Continuous ? continuous : pulses;
}

double fig1_g0() {
  const auto c = ScenarioConfig::fig1();
  return *g2_equal(steady_state_direct(FockSpace(c.dim), c.mode, c.P0));
}

Verdict criterion1() {
  const LinearModeReport r = linear_mode_report(ScenarioConfig::fig1());
  return {r.samples > 0 && r.max_g2_deviation < 1e-6 && r.min_purity > 1.0 - 1e-8,
          "max|g2-1| " + fmt(r.max_g2_deviation) + " over " + std::to_string(r.samples) +
              " samples, purity deficit " + fmt(1.0 - r.min_purity)};
}

Verdict criterion2() {
  const double E = 2.0;
  const Complex P0 = 0.5;
  const DensityMatrix ss = steady_state_direct(FockSpace(25), {E, 0.0}, P0);
  const Moments m = moments(ss.matrix());
  const double dn = std::abs(m.n - 0.25 / 4.25);
  const double dpsi = std::abs(m.psi - (-P0 / Complex(E, -0.5)));
  return {dn < 1e-8 && dpsi < 1e-8, "|n - 0.25/4.25| " + fmt(dn) + ", |psi + P0/(E - i/2)| " + fmt(dpsi)};
}

Verdict criterion3() {
  const RateLawReport r = validate_rate_law(fig1_trace(Fig1Variant::Combined));
  return {r.samples > 0 && r.max_relative_error < 1e-3,
          "relative residual " + fmt(r.max_relative_error) + " on " + std::to_string(r.samples) +
              " samples at sample_dt 0.005"};
}

Verdict criterion4() {
  const Eq6Report r = check_eq6_cycle(fig1_trace(Fig1Variant::Combined), 2);
  const bool ok = r.normalized_integral < 1e-3 && r.reconstruction_error < 1e-3 && r.cumulative_changes_sign;
  return {ok, "normalized integral " + fmt(r.normalized_integral) + ", reconstruction " +
                  fmt(r.reconstruction_error) + ", cumulative integral " +
                  (r.cumulative_changes_sign ? "changes sign" : "keeps its sign") + " (end vs g0 " +
                  fmt(r.end_deviation) + ")"};
}

Verdict criterion5() {
  const auto c = ScenarioConfig::fig1();
  const auto [ta, tb] = c.window();
  const double g0 = fig1_g0();
  const WindowMinimum m = find_window_min(fig1_trace(Fig1Variant::Combined), ta, tb);

  std::vector<double> flat;
  for (const auto& r : fig1_trace(Fig1Variant::Continuous).records)
    if (r.t >= c.horizon() - c.period - 1e-9 && r.g2) flat.push_back(*r.g2);
  const double mean = std::accumulate(flat.begin(), flat.end(), 0.0) / flat.size();
  double var = 0.0;
  for (double x : flat) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / flat.size());

  double worst = 0.0;
  for (const auto& r : fig1_trace(Fig1Variant::PulsesOnly).records)
    if (r.n > 1e-4 && r.g2) worst = std::max(worst, std::abs(*r.g2 - 1.0));

  return {m.g2_min < g0 && sd < 1e-6 && worst < 0.05,
          "combined min " + fmt(m.g2_min, 4) + " vs g0 " + fmt(g0, 4) + "; continuous sd " + fmt(sd) +
              "; pulses-only max|g2-1| " + fmt(worst)};
}

Verdict criterion6() {
  const SweepResult s = run_fig2(ScenarioConfig::fig2().P0_grid, g_jobs);
  double worst_g0 = 0.0;
  int small_n = 0;
  std::string offenders;
  for (const auto& p : s.points) {
    worst_g0 = std::max(worst_g0, std::abs(p.g0 - 1.0));
    if (p.n_ts <= 0.1) {
      ++small_n;
      if (!(p.g2_ts < 0.5))
        offenders += " P0=" + fmt(p.P0) + ":g2=" + fmt(p.g2_ts) + ",n=" + fmt(p.n_ts);
    }
  }
  return {worst_g0 < 0.05 && offenders.empty() && small_n > 0,
          "max|g0-1| " + fmt(worst_g0) + "; " + std::to_string(small_n) + " points with n(t_s) <= 0.1" +
              (offenders.empty() ? ", all g2 < 0.5" : ", g2 >= 0.5 at" + offenders)};
}

Verdict criterion7() {
  const SweepPoint p = run_sweep_point(ScenarioConfig::fig3(), 1.0, 0.5);
  return {p.g2_ts < p.g0 && p.n_ts > p.n0, "g2_min " + fmt(p.g2_ts, 4) + " < g0 " + fmt(p.g0, 4) +
                                              ", n(t_s) " + fmt(p.n_ts, 4) + " > n0 " + fmt(p.n0, 4)};
}

Verdict criterion8() {
  const Fig4Result strong = run_fig4(Regime::Strong);
  const Fig4Result weak = run_fig4(Regime::Weak);
  double zero_delay = 0.0;
  for (const Fig4Result* r : {&strong, &weak})
    zero_delay = std::max(zero_delay, std::abs(r->combined.at(r->minimum.t_s) - r->minimum.g2_min));
  double peak = 0.0;
  for (std::size_t i = 0; i < strong.combined.t.size(); ++i)
    if (std::abs(strong.combined.t[i] - strong.minimum.t_s) <= 1.0 + 1e-9)
      peak = std::max(peak, strong.combined.g2[i]);
  const double ratio = max_window_ratio(strong.combined, 1.0, 0.2);
  return {zero_delay < 1e-8 && peak < 1.0 && ratio < 1.5,
          "zero-delay mismatch " + fmt(zero_delay) + "; strong max g2 within 1 " + fmt(peak) +
              "; strong window ratio " + fmt(ratio) + " (weak, reported: " +
              fmt(max_window_ratio(weak.combined, 1.0, 0.2)) + ")"};
}

// Propagator against the dense exponential of the vectorized generator,
// including a delta pulse composed with an independent displacement.
double small_dim_mismatch() {
  double worst = 0.0;
  for (int d = 3; d <= 8; ++d) {
    const FockSpace space(d);
    const ModeParams params{0.25, 1.0};
    const Complex P0 = 0.5, P1 = 0.2;
    const double t1 = 1.3, t2 = 3.0;
    const auto schedule = DriveSchedule::periodic(P0, P1, 10.0, 1, PulseShape::Delta, 0.0, t1);
    const DensityMatrix rho0 = DensityMatrix::vacuum(space);
    const DensityMatrix got = evolve_state(rho0, params, schedule, 0.0, t2);

    const Eigen::MatrixXcd L = vectorized_generator(space, params, P0);
    auto flow = [&](const OperatorMatrix& x, double dt) {
      const Eigen::VectorXcd v = exp_pade(L * dt) * Eigen::Map<const Eigen::VectorXcd>(x.data(), d * d);
      return OperatorMatrix(Eigen::Map<const OperatorMatrix>(v.data(), d, d));
    };
    const OperatorMatrix D = displacement_series(space, -Complex(0.0, 1.0) * P1);
    const OperatorMatrix exact = flow(D * flow(rho0.matrix(), t1) * D.adjoint(), t2 - t1);
    worst = std::max(worst, max_abs(got.matrix() - exact));
  }
  return worst;
}

Verdict criterion9() {
  const ScenarioConfig c = ScenarioConfig::fig3();
  const std::size_t na = c.alpha_grid.size(), np = c.P0_grid.size();
  std::vector<double> distance(na * np, 0.0);
  parallel_for(na * np, [&](std::size_t k) {
    const ModeParams params{c.mode.E, c.alpha_grid[k / np]};
    distance[k] = compare_steady_states(c.dim, params, c.P0_grid[k % np], 1e-8).trace_distance;
  });
  const double worst = *std::max_element(distance.begin(), distance.end());
  const double exact = small_dim_mismatch();
  return {worst < 1e-7 && exact < 1e-8,
          "null-space vs long-time max trace distance " + fmt(worst) + " over " +
              std::to_string(distance.size()) + " points; dims 3..8 vs exact exponential " + fmt(exact)};
}

Verdict criterion10() {
  std::vector<ScenarioConfig> configs;
  for (auto v : {Fig1Variant::Combined, Fig1Variant::Continuous, Fig1Variant::PulsesOnly})
    configs.push_back(ScenarioConfig::fig1(v));
  for (double P0 : {0.05, 1.0}) {
    ScenarioConfig c = ScenarioConfig::fig2();
    c.name = "fig2@P0=" + fmt(P0);
    c.P0 = P0;
    configs.push_back(c);
  }
  for (auto [alpha, P0] : {std::pair{1.0, 0.5}, std::pair{2.0, 1.0}, std::pair{0.02, 1.0}}) {
    ScenarioConfig c = ScenarioConfig::fig3();
    c.name = "fig3@alpha=" + fmt(alpha) + ",P0=" + fmt(P0);
    c.mode.alpha = alpha;
    c.P0 = P0;
    configs.push_back(c);
  }
  configs.push_back(ScenarioConfig::fig4(Regime::Weak));
  configs.push_back(ScenarioConfig::fig4(Regime::Strong));

  std::vector<ConvergenceReport> reports(configs.size());
  parallel_for(configs.size(), [&](std::size_t k) { reports[k] = scenario_convergence(configs[k]); });
  bool ok = true;
  double worst = 0.0;
  std::string failing;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    ok = ok && reports[k].ok();
    worst = std::max(worst, reports[k].differences.back());
    if (!reports[k].ok()) failing += " " + configs[k].name;
  }
  return {ok, std::to_string(configs.size()) + " ladders, worst last-two-dims difference " + fmt(worst) +
                  (failing.empty() ? "" : "; failing:" + failing)};
}

Verdict criterion11() {
  const GaussianReport r = gaussian_robustness({0.05, 0.1, 0.2, 0.3, 1.0, 3.0});
  std::string curve;
  for (const auto& row : r.rows) curve += " " + fmt(row.sigma) + ":" + fmt(row.min_g2, 4);
  return {r.passed(), "g0 " + fmt(r.g0, 4) + ", delta " + fmt(r.delta_min_g2, 4) + ", sigma=0.05 gap " +
                          fmt(r.narrow_relative_gap.value_or(NAN)) + "; min g2 by sigma:" + curve};
}

struct Criterion {
  int id;
  const char* title;
  Verdict (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> expected_fail;
  std::vector<int> only;
  app.add_option("--expected-fail", expected_fail, "Criteria documented as failing");
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--jobs", g_jobs, "Worker threads for sweeps (0 = all cores)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "linear-mode exactness", criterion1},
      {2, "analytic steady state", criterion2},
      {3, "rate law", criterion3},
      {4, "integral cycle", criterion4},
      {5, "mechanism necessity", criterion5},
      {6, "weak-regime blockade", criterion6},
      {7, "strong-regime enhancement", criterion7},
      {8, "two-time behaviour", criterion8},
      {9, "solver cross-validation", criterion9},
      {10, "truncation control", criterion10},
      {11, "finite-pulse robustness", criterion11},
  };
  const std::set<int> xfail(expected_fail.begin(), expected_fail.end());
  int unexpected = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool known = xfail.count(c.id) > 0;
    if (!v.passed && !known) ++unexpected;
    std::printf("criterion %2d %-26s %s  %s  [%.1fs]\n", c.id, c.title,
                v.passed ? (known ? "PASS (listed as expected failure)" : "PASS")
                         : (known ? "FAIL (documented expected failure)" : "FAIL"),
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
