#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "doctest.h"
#include "dynblock/cli.hpp"
#include "dynblock/config.hpp"
#include "dynblock/errors.hpp"

using namespace dynblock;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("dynblock_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

// Data rows: neither comments nor the column header.
std::vector<std::string> rows(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    out.push_back(line);
  }
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

// A quick time trace: short period, coarse samples, small space.
ScenarioConfig quick_config() {
  ScenarioConfig c = ScenarioConfig::fig1();
  c.name = "quick";
  c.period = 4.0;
  c.sample_dt = 0.02;
  c.dim = 12;
  c.P1 = 0.5;
  c.measured_periods = 1;
  return c;
}

std::string write_config(const TempDir& dir, const std::string& name, const ScenarioConfig& c) {
  const std::string path = dir / name;
  spit(path, dump_config(c));
  return path;
}

ScenarioConfig parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

std::string replace_line(std::string text, const std::string& key, const std::string& line) {
  const std::regex re("(^|\n)" + key + " =[^\n]*");
  return std::regex_replace(text, re, "$1" + line, std::regex_constants::format_first_only);
}

}  // namespace

TEST_CASE("dump-defaults round-trips every default config") {
  for (const auto& name : default_config_names()) {
    const Outcome o = run_cli({"--dump-defaults", name});
    REQUIRE(o.code == 0);
    const ScenarioConfig c = parse_text(o.out);
    const ScenarioConfig ref = default_config(name);
    CHECK(dump_config(c) == dump_config(ref));
    CHECK(config_hash(c) == config_hash(ref));
    CHECK(c.name == ref.name);
    CHECK(c.P0_grid == ref.P0_grid);
    CHECK(c.alpha_grid == ref.alpha_grid);
    CHECK(c.step.rtol == ref.step.rtol);
    CHECK(c.mode.alpha == ref.mode.alpha);
    CHECK(c.period == ref.period);
  }
  CHECK(run_cli({"--dump-defaults", "nope"}).code == cli::kBadInput);
}

TEST_CASE("config errors are line-anchored and name missing keys") {
  const std::string base = dump_config(quick_config());
  SUBCASE("missing key") {
    const std::string text = replace_line(base, "T", "");
    try {
      parse_text(text);
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("'T'") != std::string::npos);
    }
  }
  SUBCASE("bad number") {
    const std::string text = replace_line(base, "alpha", "alpha = 0.05x");
    try {
      parse_text(text);
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("test.cfg:7:") != std::string::npos);
    }
  }
  SUBCASE("unknown key, duplicate key, stray line") {
    CHECK_THROWS_AS(parse_text(base + "[mode]\nbeta = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_text(base + "[mode]\nE = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_text("E = 1\n" + base), ConfigError);
    CHECK_THROWS_AS(parse_text(base + "[nowhere]\n"), ConfigError);
    CHECK_THROWS_AS(parse_text(base + "just words\n"), ConfigError);
  }
  SUBCASE("physical validation") {
    CHECK_THROWS_AS(parse_text(replace_line(base, "dim", "dim = 2")), ConfigError);
    CHECK_THROWS_AS(parse_text(replace_line(base, "sample_dt", "sample_dt = -1")), ConfigError);
    CHECK_THROWS_AS(parse_text(replace_line(base, "measured_periods", "measured_periods = 0")), ConfigError);
  }
  SUBCASE("grid shorthands") {
    const auto c = parse_text(replace_line(base, "P0_grid", "P0_grid = log(0.05, 1, 20)"));
    CHECK(c.P0_grid == log_grid(0.05, 1.0, 20));
    const auto d = parse_text(replace_line(base, "P0_grid", "P0_grid = lin(0, 1, 5)"));
    CHECK(d.P0_grid == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  }
  SUBCASE("cli exit code") {
    TempDir dir;
    spit(dir / "bad.cfg", replace_line(base, "T", ""));
    const Outcome o = run_cli({"evolve", dir / "bad.cfg", "-o", dir / "out"});
    CHECK(o.code == cli::kBadInput);
    CHECK(o.err.rfind("dynblock: error[config]:", 0) == 0);
    CHECK(o.err.find("'T'") != std::string::npos);
  }
}

TEST_CASE("evolve writes a deterministic table of the contracted size") {
  TempDir dir;
  const ScenarioConfig c = quick_config();
  const std::string cfg = write_config(dir, "quick.cfg", c);
  REQUIRE(run_cli({"evolve", cfg, "-o", dir / "a"}).code == 0);
  REQUIRE(run_cli({"evolve", cfg, "-o", dir / "b"}).code == 0);

  const std::string table = slurp(dir / "a/quick.csv");
  CHECK(table == slurp(dir / "b/quick.csv"));
  CHECK(slurp(dir / "a/quick_pulses.csv") == slurp(dir / "b/quick_pulses.csv"));
  CHECK(table.find(config_hash(c)) != std::string::npos);

  const auto data = rows(table);
  CHECK(data.size() == static_cast<std::size_t>(std::lround(c.horizon() / c.sample_dt)) + 1);
  CHECK(split(data[0]).size() == 9);
  // Two pulses, each recorded on both sides.
  CHECK(rows(slurp(dir / "a/quick_pulses.csv")).size() == 4);

  const std::string manifest = slurp(dir / "a/quick.manifest.json");
  CHECK(manifest.find("\"quick.csv\"") != std::string::npos);
  CHECK(manifest.find("\"quick_pulses.csv\"") != std::string::npos);
  CHECK(manifest.find(config_hash(c)) != std::string::npos);
}

TEST_CASE("dim override changes the run and its hash") {
  TempDir dir;
  const std::string cfg = write_config(dir, "quick.cfg", quick_config());
  REQUIRE(run_cli({"--dim", "10", "evolve", cfg, "-o", dir / "o"}).code == 0);
  ScenarioConfig c = quick_config();
  c.dim = 10;
  CHECK(slurp(dir / "o/quick.csv").find(config_hash(c)) != std::string::npos);
  CHECK(slurp(dir / "o/quick.manifest.json").find("\"dim\": 10") != std::string::npos);
}

TEST_CASE("sweep rows match the grid and a single point matches evolve") {
  TempDir dir;
  ScenarioConfig c = quick_config();
  c.name = "grid";
  c.kind = ScenarioKind::Colormap;
  c.alpha_grid = {0.05, 0.5, 1.0};
  c.P0_grid = {0.1, 0.2};
  REQUIRE(run_cli({"--jobs", "2", "sweep", write_config(dir, "grid.cfg", c), "-o", dir / "s"}).code == 0);
  CHECK(rows(slurp(dir / "s/grid_sweep.csv")).size() == 6);
  CHECK(!rows(slurp(dir / "s/grid_regrid.csv")).empty());

  ScenarioConfig one = quick_config();
  one.name = "one";
  one.kind = ScenarioKind::OccupationSweep;
  one.P0_grid = {0.2};
  REQUIRE(run_cli({"sweep", write_config(dir, "one.cfg", one), "-o", dir / "s"}).code == 0);
  const auto sweep_rows = rows(slurp(dir / "s/one_sweep.csv"));
  REQUIRE(sweep_rows.size() == 1);
  const auto fields = split(sweep_rows[0]);

  ScenarioConfig ev = one;
  ev.kind = ScenarioKind::TimeTrace;
  REQUIRE(run_cli({"evolve", write_config(dir, "ev.cfg", ev), "-o", dir / "e"}).code == 0);
  const auto [ta, tb] = ev.window();
  double best = 1e300, t_best = 0, n_best = 0;
  for (const auto& line : rows(slurp(dir / "e/one.csv"))) {
    const auto f = split(line);
    const double t = std::stod(f[0]), g2 = std::stod(f[4]);
    if (t + 1e-9 < ta || t - 1e-9 > tb || std::isnan(g2)) continue;
    if (g2 < best) {
      best = g2;
      t_best = t;
      n_best = std::stod(f[1]);
    }
  }
  CHECK(std::stod(fields[2]) == t_best);
  CHECK(std::stod(fields[3]) == n_best);
  CHECK(std::stod(fields[4]) == best);

  one.P0_grid.clear();
  std::string text = dump_config(one);
  spit(dir / "empty.cfg", text);
  CHECK(run_cli({"sweep", dir / "empty.cfg", "-o", dir / "s"}).code == cli::kBadInput);
}

TEST_CASE("output and failure exit codes") {
  TempDir dir;
  const std::string cfg = write_config(dir, "quick.cfg", quick_config());
  spit(dir / "file", "x");
  const Outcome o = run_cli({"evolve", cfg, "-o", dir / "file/sub"});
  CHECK(o.code == cli::kOutputDir);
  CHECK(o.err.find("error[output-dir]") != std::string::npos);

  ScenarioConfig starved = quick_config();
  starved.step.max_steps = 5;
  const Outcome f = run_cli({"evolve", write_config(dir, "starved.cfg", starved), "-o", dir / "o"});
  CHECK(f.code == cli::kComputeFailed);
  CHECK(f.err.find("error[") != std::string::npos);

  CHECK(run_cli({"--bogus"}).code == cli::kBadInput);
  CHECK(run_cli({}).code == cli::kBadInput);
  CHECK(run_cli({"--help"}).code == cli::kOk);
}

TEST_CASE("check runs named checks and reports failures by name") {
  TempDir dir;
  const Outcome ok = run_cli({"check", "--only", "coherent", "-o", dir / "c"});
  CHECK(ok.code == cli::kOk);
  CHECK(ok.out.rfind("PASS coherent", 0) == 0);
  CHECK(rows(slurp(dir / "c/check_report.csv")).size() == 1);
  CHECK(slurp(dir / "c/check.manifest.json").find("\"coherent\": true") != std::string::npos);

  const Outcome bad = run_cli({"--dim", "4", "check", "--only", "coherent"});
  CHECK(bad.code == cli::kCheckFailed);
  CHECK(bad.err.find("check-failed: coherent") != std::string::npos);

  CHECK(run_cli({"check", "--only", "nope"}).code == cli::kBadInput);
}

TEST_CASE("plot scripts need their data") {
  TempDir dir;
  const Outcome empty = run_cli({"plot-scripts", dir.path().string()});
  CHECK(empty.code == cli::kBadInput);
  CHECK(empty.err.find("fig1b.csv") != std::string::npos);

  for (const char* name : {"fig1b", "fig1d"}) spit(dir / (std::string(name) + ".csv"), "t\n0\n");
  const Outcome partial = run_cli({"plot-scripts", dir.path().string()});
  CHECK(partial.code == cli::kBadInput);
  CHECK(partial.err.find("fig1f.csv") != std::string::npos);

  spit(dir / "fig1f.csv", "t\n0\n");
  REQUIRE(run_cli({"plot-scripts", dir.path().string()}).code == 0);
  const std::string script = slurp(dir / "fig1.gp");
  CHECK(script.find("layout 3,1") != std::string::npos);
  for (const char* f : {"'fig1b.csv'", "'fig1d.csv'", "'fig1f.csv'"}) CHECK(script.find(f) != std::string::npos);
  CHECK(script.find(dir.path().string()) == std::string::npos);
  CHECK_FALSE(fs::exists(dir.path() / "fig3.gp"));

  spit(dir / "fig3_regrid.csv", "alpha,n\n");
  REQUIRE(run_cli({"plot-scripts", dir.path().string()}).code == 0);
  CHECK(slurp(dir / "fig3.gp").find("set logscale xy") != std::string::npos);
  const std::string again = slurp(dir / "fig1.gp");
  CHECK(again == script);
}
