#include "dynblock/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dynblock/checks.hpp"
#include "dynblock/config.hpp"
#include "dynblock/errors.hpp"

namespace fs = std::filesystem;

namespace dynblock::cli {

namespace {

using Json = nlohmann::ordered_json;

struct OutputDirError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  unsigned jobs = 0;
  std::optional<int> dim;
  std::optional<double> rtol;
  std::optional<double> atol;
  bool seedless = false;
};

std::string num(double v) { return format_double(v); }

std::string iso_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw OutputDirError("cannot create output directory '" + dir.string() + "'");
  const fs::path probe = dir / ".dynblock-write-probe";
  {
    std::ofstream f(probe);
    if (!f) throw OutputDirError("output directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);
}

// Writes a file, failing with an output-dir error rather than silently.
class Emitter {
 public:
  explicit Emitter(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    f << content;
    f.close();
    if (!f) throw OutputDirError("cannot write '" + (dir_ / name).string() + "'");
    files_.push_back(name);
  }

  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

std::string header(const std::string& what, const ScenarioConfig& c, const std::string& extra = {}) {
  std::ostringstream o;
  o << "# dynblock " << what << " " << c.name << "\n"
    << "# config-hash: " << config_hash(c) << "\n"
    << "# units: time in 1/gamma, energies and drives in gamma\n"
    << extra;
  return o.str();
}

ScenarioConfig effective(ScenarioConfig c, const Options& opt) {
  if (opt.dim) c.dim = *opt.dim;
  if (opt.rtol) c.step.rtol = *opt.rtol;
  if (opt.atol) c.step.atol = *opt.atol;
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("override rejected: ") + e.what());
  }
  return c;
}

Json tolerances(const StepControl& s) {
  return Json{{"rtol", s.rtol},
              {"atol", s.atol},
              {"max_step", std::isfinite(s.max_step) ? Json(s.max_step) : Json("inf")},
              {"min_step", s.min_step},
              {"max_steps", s.max_steps}};
}

void write_manifest(Emitter& em, const std::string& stem, const std::string& command,
                    const ScenarioConfig& c, double wall, const Json& checks) {
  Json m;
  m["command"] = command;
  m["scenario"] = c.name;
  m["kind"] = to_string(c.kind);
  m["config_hash"] = config_hash(c);
  m["version"] = kVersion;
  m["dim"] = c.dim;
  m["tolerances"] = tolerances(c.step);
  m["sample_dt"] = c.sample_dt;
  m["created_utc"] = iso_now();
  m["wall_time_s"] = wall;
  m["files"] = em.files();
  m["checks"] = checks;
  m["config"] = dump_config(c);
  em.write(stem + ".manifest.json", m.dump(2) + "\n");
}

std::string trajectory_csv(const Trajectory& traj, const ScenarioConfig& c) {
  std::ostringstream o;
  o << header("trajectory", c,
              "# grid samples; at a pulse instant the row holds the post-pulse state\n"
              "# pre-pulse states: " + c.name + "_pulses.csv\n")
    << "t,n,re_psi,im_psi,g2,f,drive_re,drive_im,pulse\n";
  for (const auto& r : traj.records) {
    o << num(r.t) << ',' << num(r.n) << ',' << num(r.psi.real()) << ',' << num(r.psi.imag()) << ','
      << num(r.g2.value_or(NAN)) << ',' << num(r.f.value_or(NAN)) << ',' << num(r.drive.real())
      << ',' << num(r.drive.imag()) << ',' << (r.pulse ? 1 : 0) << '\n';
  }
  return o.str();
}

std::string pulses_csv(const Trajectory& traj, const ScenarioConfig& c) {
  std::ostringstream o;
  o << header("pulse snapshots", c) << "t,side,grid_index,n,re_psi,im_psi,g2,f\n";
  for (const auto& p : traj.pulse_records) {
    for (const auto* r : {&p.pre, &p.post}) {
      o << num(r->t) << ',' << (r == &p.pre ? "pre" : "post") << ',' << p.grid_index << ','
        << num(r->n) << ',' << num(r->psi.real()) << ',' << num(r->psi.imag()) << ','
        << num(r->g2.value_or(NAN)) << ',' << num(r->f.value_or(NAN)) << '\n';
    }
  }
  return o.str();
}

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int cmd_evolve(const std::string& config_path, const fs::path& dir, const Options& opt,
               std::ostream& out) {
  const ScenarioConfig c = effective(load_config(config_path), opt);
  prepare_dir(dir);
  const auto t0 = Clock::now();
  const Trajectory traj = run_scenario(c);
  const auto [ta, tb] = c.window();
  const WindowMinimum m = find_window_min(traj, ta, tb);
  Emitter em(dir);
  em.write(c.name + ".csv", trajectory_csv(traj, c));
  em.write(c.name + "_pulses.csv", pulses_csv(traj, c));
  Json checks{{"truncation_headroom", !traj.truncation_warning && traj.max_tail_population < kTailLimit}};
  write_manifest(em, c.name, "evolve", c, since(t0), checks);
  out << c.name << ": " << traj.records.size() << " samples, min g2 " << num(m.g2_min) << " at t "
      << num(m.t_s) << " (n " << num(m.n_at_min) << ")\n";
  return kOk;
}

std::vector<double> occupation_axis(const SweepResult& s, int n) {
  double lo = INFINITY, hi = 0.0;
  for (const auto& p : s.points) {
    for (double v : {p.n_ts, p.n0}) {
      if (v > 0.0 && std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!(hi > 0.0)) return {};
  return log_grid(lo, hi, lo == hi ? 1 : n);
}

int cmd_sweep(const std::string& config_path, const fs::path& dir, const Options& opt,
              std::ostream& out) {
  ScenarioConfig c = effective(load_config(config_path), opt);
  if (c.P0_grid.empty()) throw ConfigError(config_path + ": empty P0 grid");
  prepare_dir(dir);
  const auto t0 = Clock::now();
  const SweepResult s = run_sweep(c, opt.jobs);
  Emitter em(dir);
  std::ostringstream o;
  o << header("sweep", c, "# one row per (alpha, P0); alpha-major\n")
    << "alpha,P0,t_s,n_ts,g2_ts,g0_conventional,n_conventional,converged\n";
  for (const auto& p : s.points) {
    o << num(p.alpha) << ',' << num(p.P0) << ',' << num(p.t_s) << ',' << num(p.n_ts) << ','
      << num(p.g2_ts) << ',' << num(p.g0) << ',' << num(p.n0) << ',' << (p.converged ? 1 : 0) << '\n';
  }
  em.write(c.name + "_sweep.csv", o.str());
  if (c.kind == ScenarioKind::Colormap) {
    const OccupationSurface surf = regrid_by_occupation(s, occupation_axis(s, 40));
    std::ostringstream g;
    g << header("occupation regrid", c, "# g2 interpolated in log(n) per alpha row; nan outside a row's range\n")
      << "alpha,n,g2_combined,g2_conventional\n";
    for (std::size_t ia = 0; ia < surf.alpha_grid.size(); ++ia)
      for (std::size_t in = 0; in < surf.n_grid.size(); ++in)
        g << num(surf.alpha_grid[ia]) << ',' << num(surf.n_grid[in]) << ','
          << num(surf.combined[ia][in]) << ',' << num(surf.conventional[ia][in]) << '\n';
    em.write(c.name + "_regrid.csv", g.str());
  }
  write_manifest(em, c.name, "sweep", c, since(t0), Json{{"all_converged", s.all_converged()}});
  out << c.name << ": " << s.points.size() << " points, "
      << (s.all_converged() ? "all converged" : "truncation headroom exceeded somewhere") << "\n";
  return kOk;
}

int cmd_two_time(const std::string& config_path, const fs::path& dir, const Options& opt,
                 std::ostream& out) {
  const ScenarioConfig c = effective(load_config(config_path), opt);
  prepare_dir(dir);
  const auto t0 = Clock::now();
  const Fig4Result r = run_two_time(c);
  Emitter em(dir);
  std::ostringstream o;
  o << header("two-time", c,
              "# t_s: " + num(r.minimum.t_s) + "  g2(t_s,t_s): " + num(r.minimum.g2_min) +
                  "  n(t_s): " + num(r.minimum.n_at_min) +
                  "\n# t < t_s uses g2(t_s,t) by symmetry; conventional = continuous drive only\n")
    << "t,tau,g2_combined,g2_conventional,n_combined,n_conventional\n";
  for (std::size_t i = 0; i < r.combined.t.size(); ++i) {
    const double t = r.combined.t[i];
    o << num(t) << ',' << num(t - r.minimum.t_s) << ',' << num(r.combined.g2[i]) << ','
      << num(r.conventional.g2[i]) << ',' << num(r.combined.n_t[i]) << ',' << num(r.conventional.n_t[i])
      << '\n';
  }
  em.write(c.name + "_two_time.csv", o.str());
  const double zero_delay = std::abs(r.combined.at(r.minimum.t_s) - r.minimum.g2_min);
  write_manifest(em, c.name, "two-time", c, since(t0), Json{{"zero_delay_consistency", zero_delay < 1e-8}});
  out << c.name << ": t_s " << num(r.minimum.t_s) << ", g2 combined " << num(r.combined.at(r.minimum.t_s))
      << ", conventional " << num(r.conventional.at(r.minimum.t_s)) << "\n";
  return kOk;
}

int cmd_steady(const std::string& config_path, const fs::path& dir, const Options& opt,
               std::ostream& out) {
  const ScenarioConfig c = effective(load_config(config_path), opt);
  prepare_dir(dir);
  const auto t0 = Clock::now();
  const FockSpace space(c.dim);
  const DensityMatrix direct = steady_state_direct(space, c.mode, c.P0);
  SteadyStateEvolutionOptions sopts;
  sopts.step = c.step;
  const DensityMatrix evolved = steady_state_by_evolution(space, c.mode, c.P0, 1e-8, sopts);
  const double distance = trace_distance(direct, evolved);
  Emitter em(dir);
  std::ostringstream o;
  o << header("steady state", c, "# continuous drive P0 only\n")
    << "method,n,re_psi,im_psi,g2,tail_population\n";
  for (const auto& [name, rho] : {std::pair{"direct", &direct}, std::pair{"evolution", &evolved}}) {
    const Moments m = moments(rho->matrix());
    o << name << ',' << num(m.n) << ',' << num(m.psi.real()) << ',' << num(m.psi.imag()) << ','
      << num(g2_equal(m).value_or(NAN)) << ',' << num(rho->tail_population()) << '\n';
  }
  em.write(c.name + "_steady.csv", o.str());
  write_manifest(em, c.name, "steady", c, since(t0),
                 Json{{"cross_method", distance < 1e-7}, {"truncation_headroom", direct.tail_population() < kTailLimit}});
  out << c.name << ": steady g2 " << num(g2_equal(direct).value_or(NAN)) << ", n "
      << num(moments(direct.matrix()).n) << ", direct vs evolution trace distance " << num(distance)
      << "\n";
  return kOk;
}

int cmd_check(const std::optional<fs::path>& dir, const std::vector<std::string>& only,
              const Options& opt, std::ostream& out, std::ostream& err) {
  for (const auto& name : only)
    if (std::find(check_names().begin(), check_names().end(), name) == check_names().end())
      throw ConfigError("unknown check '" + name + "'");
  if (dir) prepare_dir(*dir);
  CheckSettings settings;
  if (opt.rtol) settings.step.rtol = *opt.rtol;
  if (opt.atol) settings.step.atol = *opt.atol;
  settings.dim = opt.dim;
  const auto t0 = Clock::now();
  std::vector<CheckResult> results;
  for (const auto& name : check_names()) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    results.push_back(run_check(name, settings));
    const CheckResult& r = results.back();
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << num(r.value) << " (limit "
        << num(r.threshold) << ") " << r.detail << "\n";
  }
  bool all = true;
  Json summary = Json::object();
  for (const auto& r : results) {
    summary[r.name] = r.passed;
    if (!r.passed) {
      all = false;
      err << "dynblock: check-failed: " << r.name << "\n";
    }
  }
  if (dir) {
    ScenarioConfig c = ScenarioConfig::fig1();
    c.name = "check";
    c.kind = ScenarioKind::Checks;
    c.step = settings.step;
    if (opt.dim) c.dim = *opt.dim;
    Emitter em(*dir);
    std::ostringstream o;
    o << header("checks", c) << "check,passed,value,threshold,detail\n";
    for (const auto& r : results)
      o << r.name << ',' << (r.passed ? 1 : 0) << ',' << num(r.value) << ',' << num(r.threshold) << ",\""
        << r.detail << "\"\n";
    em.write("check_report.csv", o.str());
    write_manifest(em, "check", "check", c, since(t0), summary);
  }
  return all ? kOk : kCheckFailed;
}

struct FigureData {
  std::string script;
  std::vector<std::string> files;
  std::string body;
};

std::vector<FigureData> figure_scripts() {
  const std::string common = "set datafile separator ','\nset key autotitle columnheader\n";
  std::vector<FigureData> figs;
  figs.push_back({"fig1.gp", {"fig1b.csv", "fig1d.csv", "fig1f.csv"},
                  "set terminal svg size 800,900\nset output 'fig1.svg'\n" + common +
                      "set multiplot layout 3,1\nset xlabel 't'\nset ylabel 'g2(t,t)'\n"
                      "plot 'fig1b.csv' using 1:5 with lines title 'combined'\n"
                      "plot 'fig1d.csv' using 1:5 with lines title 'continuous'\n"
                      "plot 'fig1f.csv' using 1:5 with lines title 'pulses only'\n"
                      "unset multiplot\n"});
  figs.push_back({"fig2.gp", {"fig2_sweep.csv"},
                  "set terminal svg size 800,500\nset output 'fig2.svg'\n" + common +
                      "set logscale x\nset xlabel 'n'\nset ylabel 'g2'\n"
                      "plot 'fig2_sweep.csv' using 4:5 with points pt 7 title 'combined, t = t_s', \\\n"
                      "     'fig2_sweep.csv' using 7:6 with points pt 5 title 'conventional'\n"});
  figs.push_back({"fig3.gp", {"fig3_regrid.csv"},
                  "set terminal svg size 1000,450\nset output 'fig3.svg'\n" + common +
                      "set logscale xy\nset view map\nset xlabel 'n(t_s)'\nset ylabel 'alpha'\n"
                      "set cblabel 'g2'\nset multiplot layout 1,2\n"
                      "splot 'fig3_regrid.csv' using 2:1:3 with points pt 5 ps 1 palette title 'combined'\n"
                      "splot 'fig3_regrid.csv' using 2:1:4 with points pt 5 ps 1 palette title 'conventional'\n"
                      "unset multiplot\n"});
  figs.push_back({"fig4.gp", {"fig4_weak_two_time.csv", "fig4_strong_two_time.csv"},
                  "set terminal svg size 1000,450\nset output 'fig4.svg'\n" + common +
                      "set multiplot layout 1,2\nset xlabel 't - t_s'\nset ylabel 'g2(t,t_s)'\n"
                      "plot 'fig4_weak_two_time.csv' using 2:3 with lines title 'weak, combined', \\\n"
                      "     '' using 2:4 with lines title 'weak, conventional'\n"
                      "plot 'fig4_strong_two_time.csv' using 2:3 with lines title 'strong, combined', \\\n"
                      "     '' using 2:4 with lines title 'strong, conventional'\n"
                      "unset multiplot\n"});
  return figs;
}

int cmd_plot_scripts(const fs::path& dir, std::ostream& out) {
  std::vector<std::string> missing;
  std::vector<const FigureData*> ready;
  const auto figs = figure_scripts();
  for (const auto& f : figs) {
    std::vector<std::string> absent;
    for (const auto& file : f.files)
      if (!fs::is_regular_file(dir / file)) absent.push_back(file);
    if (absent.empty()) ready.push_back(&f);
    else if (absent.size() < f.files.size()) missing.insert(missing.end(), absent.begin(), absent.end());
  }
  if (ready.empty()) {
    for (const auto& f : figs) missing.insert(missing.end(), f.files.begin(), f.files.end());
  }
  if (!missing.empty() || ready.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw MissingData("missing data files in '" + dir.string() + "': " + list);
  }
  prepare_dir(dir);
  Emitter em(dir);
  for (const auto* f : ready) {
    em.write(f->script, "# gnuplot script; run from this directory\n" + f->body);
    out << f->script << "\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamical photon blockade simulator", "dynblock"};
  app.fallthrough();
  app.set_version_flag("--version", kVersion);

  Options opt;
  int jobs = 0;
  int dim = 0;
  double rtol = 0.0, atol = 0.0;
  std::string dump;
  app.add_option("--jobs", jobs, "Sweep worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  auto* dim_opt = app.add_option("--dim", dim, "Override the Fock truncation")->check(CLI::Range(3, 200));
  auto* rtol_opt = app.add_option("--rtol", rtol, "Override the integrator relative tolerance")
                       ->check(CLI::PositiveNumber);
  auto* atol_opt = app.add_option("--atol", atol, "Override the integrator absolute tolerance")
                       ->check(CLI::PositiveNumber);
  app.add_flag("--seedless", opt.seedless, "Accepted for scripts; every computation is deterministic");
  auto* dump_opt = app.add_option("--dump-defaults", dump, "Print a default config (fig1b, fig2, ...)")
                       ->expected(0, 1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> only;

  auto add_run = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "Config file")->required();
    sub->add_option("-o,--output", out_dir, "Output directory")->required();
    return sub;
  };
  auto* evolve = add_run("evolve", "Time trace of one scenario");
  auto* sweep = add_run("sweep", "Grid sweep over P0 (and alpha)");
  auto* two_time = add_run("two-time", "g2(t, t_s) around the window minimum");
  auto* steady = add_run("steady", "Steady state of the continuous drive, two methods");
  auto* check = app.add_subcommand("check", "Run the verification suite");
  check->add_option("-o,--output", out_dir, "Directory for the check report");
  check->add_option("--only", only, "Run only these checks")->expected(1, -1);
  auto* plot = app.add_subcommand("plot-scripts", "Write gnuplot scripts for emitted tables");
  plot->add_option("dir", out_dir, "Directory holding the data files")->required();
  app.require_subcommand(0, 1);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadInput;
  }
  if (jobs > 0) opt.jobs = static_cast<unsigned>(jobs);
  if (*dim_opt) opt.dim = dim;
  if (*rtol_opt) opt.rtol = rtol;
  if (*atol_opt) opt.atol = atol;

  try {
    if (*dump_opt) {
      ScenarioConfig c = default_config(dump.empty() ? "fig1b" : dump);
      if (opt.dim) c.dim = *opt.dim;
      out << "# dynblock default config: " << c.name << "\n" << dump_config(c);
      return kOk;
    }
    if (*evolve) return cmd_evolve(config_path, out_dir, opt, out);
    if (*sweep) return cmd_sweep(config_path, out_dir, opt, out);
    if (*two_time) return cmd_two_time(config_path, out_dir, opt, out);
    if (*steady) return cmd_steady(config_path, out_dir, opt, out);
    if (*check)
      return cmd_check(out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir), only, opt, out, err);
    if (*plot) return cmd_plot_scripts(out_dir, out);
    err << app.help();
    return kBadInput;
  } catch (const ConfigError& e) {
    err << "dynblock: error[config]: " << e.what() << "\n";
    return kBadInput;
  } catch (const MissingData& e) {
    err << "dynblock: error[missing-data]: " << e.what() << "\n";
    return kBadInput;
  } catch (const OutputDirError& e) {
    err << "dynblock: error[output-dir]: " << e.what() << "\n";
    return kOutputDir;
  } catch (const IntegratorFailure& e) {
    err << "dynblock: error[" << e.kind() << "]: t=" << num(e.time()) << ": " << e.what() << "\n";
    return kComputeFailed;
  } catch (const Error& e) {
    err << "dynblock: error[" << e.kind() << "]: " << e.what() << "\n";
    return e.kind() == std::string("invalid-argument") ? kBadInput : kComputeFailed;
  }
}

}  // namespace dynblock::cli
