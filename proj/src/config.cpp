#include "dynblock/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dynblock/errors.hpp"

namespace dynblock {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

// section -> key -> entry
using Table = std::map<std::string, std::map<std::string, Entry>>;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"scenario", {"name", "kind"}},
      {"mode", {"E", "alpha"}},
      {"drive", {"P0", "P0_im", "P1", "P1_im", "T", "shape", "sigma"}},
      {"run", {"dim", "warmup_periods", "measured_periods", "sample_dt"}},
      {"sweep", {"P0_grid", "alpha_grid"}},
      {"two-time", {"half_width", "dt"}},
      {"convergence", {"dims"}},
      {"integrator", {"rtol", "atol", "max_step", "min_step", "max_steps"}},
  };
  return s;
}

class Reader {
 public:
  Reader(Table table, std::string source) : table_(std::move(table)), source_(std::move(source)) {}

  const Entry* find(const std::string& section, const std::string& key) const {
    auto s = table_.find(section);
    if (s == table_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  const Entry& require(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) throw ConfigError(source_ + ": missing key '" + key + "' in [" + section + "]");
    return *e;
  }

  [[noreturn]] void fail(const Entry& e, const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(e.line) + ": " + msg);
  }

  double number(const Entry& e, bool allow_inf = false) const {
    double v = 0.0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end) fail(e, "expected a number, got '" + e.value + "'");
    if (std::isnan(v) || (std::isinf(v) && !(allow_inf && v > 0))) fail(e, "value must be finite");
    return v;
  }

  long integer(const Entry& e) const {
    long v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end) fail(e, "expected an integer, got '" + e.value + "'");
    return v;
  }

  // "a, b, c" or log(lo, hi, n) or lin(lo, hi, n); empty text is an empty list.
  std::vector<double> list(const Entry& e) const {
    std::vector<double> out;
    const std::string v = trim(e.value);
    if (v.empty()) return out;
    for (const char* fn : {"log(", "lin("}) {
      if (v.rfind(fn, 0) == 0) {
        if (v.back() != ')') fail(e, "unterminated " + std::string(fn, 3) + "(...)");
        const Entry inner{v.substr(4, v.size() - 5), e.line};
        const auto args = list(inner);
        if (args.size() != 3 || args[2] != std::floor(args[2]) || args[2] < 1)
          fail(e, std::string(fn, 3) + "(lo, hi, n) needs three arguments with integer n >= 1");
        const int n = static_cast<int>(args[2]);
        if (fn[1] == 'o') {
          try {
            return log_grid(args[0], args[1], n);
          } catch (const Error& err) {
            fail(e, err.what());
          }
        }
        for (int i = 0; i < n; ++i)
          out.push_back(n == 1 ? args[0] : args[0] + (args[1] - args[0]) * i / (n - 1));
        return out;
      }
    }
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(number({trim(item), e.line}));
    return out;
  }

  const std::string& source() const { return source_; }

 private:
  Table table_;
  std::string source_;
};

Table tokenize(std::istream& in, const std::string& source) {
  Table table;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const std::string where = source + ":" + std::to_string(line) + ": ";
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(text.substr(1, text.size() - 2));
      if (!schema().count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(text.substr(0, eq));
    if (section.empty()) throw ConfigError(where + "key '" + key + "' outside any section");
    if (!schema().at(section).count(key))
      throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    auto& slot = table[section];
    if (slot.count(key)) throw ConfigError(where + "duplicate key '" + key + "'");
    slot[key] = {trim(text.substr(eq + 1)), line};
  }
  return table;
}

bool is_sweep(ScenarioKind k) { return k == ScenarioKind::OccupationSweep || k == ScenarioKind::Colormap; }

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : " ") + format_double(v[i]);
  return s;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

ScenarioKind parse_kind(const std::string& text) {
  for (ScenarioKind k : {ScenarioKind::TimeTrace, ScenarioKind::OccupationSweep, ScenarioKind::Colormap,
                         ScenarioKind::TwoTime, ScenarioKind::Checks})
    if (text == to_string(k)) return k;
  throw ConfigError("unknown scenario kind '" + text + "'");
}

ScenarioConfig parse_config(std::istream& in, const std::string& source) {
  const Reader r(tokenize(in, source), source);
  ScenarioConfig c;

  if (const Entry* e = r.find("scenario", "name")) {
    if (e->value.empty() || e->value.find_first_of("/\\ \t") != std::string::npos)
      r.fail(*e, "name must be a non-empty file-name stem");
    c.name = e->value;
  }
  if (const Entry* e = r.find("scenario", "kind")) {
    try {
      c.kind = parse_kind(e->value);
    } catch (const ConfigError& err) {
      r.fail(*e, err.what());
    }
  }

  c.mode.E = r.number(r.require("mode", "E"));
  c.mode.alpha = r.number(r.require("mode", "alpha"));
  c.P0 = {r.number(r.require("drive", "P0")), 0.0};
  c.P1 = {r.number(r.require("drive", "P1")), 0.0};
  if (const Entry* e = r.find("drive", "P0_im")) c.P0.imag(r.number(*e));
  if (const Entry* e = r.find("drive", "P1_im")) c.P1.imag(r.number(*e));
  c.period = r.number(r.require("drive", "T"));
  if (const Entry* e = r.find("drive", "shape")) {
    if (e->value == "delta") c.shape = PulseShape::Delta;
    else if (e->value == "gaussian") c.shape = PulseShape::Gaussian;
    else r.fail(*e, "shape must be delta or gaussian");
  }
  if (const Entry* e = r.find("drive", "sigma")) c.sigma = r.number(*e);

  c.dim = static_cast<int>(r.integer(r.require("run", "dim")));
  c.sample_dt = r.number(r.require("run", "sample_dt"));
  if (const Entry* e = r.find("run", "warmup_periods")) c.warmup_periods = static_cast<int>(r.integer(*e));
  if (const Entry* e = r.find("run", "measured_periods")) c.measured_periods = static_cast<int>(r.integer(*e));

  if (const Entry* e = r.find("sweep", "P0_grid")) c.P0_grid = r.list(*e);
  if (const Entry* e = r.find("sweep", "alpha_grid")) c.alpha_grid = r.list(*e);
  if (is_sweep(c.kind)) {
    const Entry& e = r.require("sweep", "P0_grid");
    if (c.P0_grid.empty()) r.fail(e, "empty P0 grid");
    if (const Entry* a = r.find("sweep", "alpha_grid"); a && c.kind == ScenarioKind::Colormap && c.alpha_grid.empty())
      r.fail(*a, "empty alpha grid");
  }

  if (const Entry* e = r.find("two-time", "half_width")) c.two_time_half_width = r.number(*e);
  if (const Entry* e = r.find("two-time", "dt")) c.two_time_dt = r.number(*e);
  if (const Entry* e = r.find("convergence", "dims")) {
    c.dim_ladder.clear();
    for (double d : r.list(*e)) {
      if (d != std::floor(d)) r.fail(*e, "ladder dims must be integers");
      c.dim_ladder.push_back(static_cast<int>(d));
    }
  }
  if (const Entry* e = r.find("integrator", "rtol")) c.step.rtol = r.number(*e);
  if (const Entry* e = r.find("integrator", "atol")) c.step.atol = r.number(*e);
  if (const Entry* e = r.find("integrator", "max_step")) c.step.max_step = r.number(*e, true);
  if (const Entry* e = r.find("integrator", "min_step")) c.step.min_step = r.number(*e);
  if (const Entry* e = r.find("integrator", "max_steps")) c.step.max_steps = r.integer(*e);

  try {
    c.validate();
    if (!(c.step.rtol > 0.0) || !(c.step.atol > 0.0) || !(c.step.max_step > 0.0) ||
        !(c.step.min_step > 0.0) || c.step.max_steps < 1)
      throw InvalidArgument("integrator settings must be positive");
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& err) {
    throw ConfigError(source + ": " + err.what());
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot read config file");
  return parse_config(in, path);
}

std::string dump_config(const ScenarioConfig& c) {
  std::ostringstream o;
  o << "[scenario]\n"
    << "name = " << c.name << "\n"
    << "kind = " << to_string(c.kind) << "\n\n"
    << "[mode]\n"
    << "E = " << format_double(c.mode.E) << "\n"
    << "alpha = " << format_double(c.mode.alpha) << "\n\n"
    << "[drive]\n"
    << "P0 = " << format_double(c.P0.real()) << "\n"
    << "P0_im = " << format_double(c.P0.imag()) << "\n"
    << "P1 = " << format_double(c.P1.real()) << "\n"
    << "P1_im = " << format_double(c.P1.imag()) << "\n"
    << "T = " << format_double(c.period) << "\n"
    << "shape = " << (c.shape == PulseShape::Delta ? "delta" : "gaussian") << "\n"
    << "sigma = " << format_double(c.sigma) << "\n\n"
    << "[run]\n"
    << "dim = " << c.dim << "\n"
    << "warmup_periods = " << c.warmup_periods << "\n"
    << "measured_periods = " << c.measured_periods << "\n"
    << "sample_dt = " << format_double(c.sample_dt) << "\n\n"
    << "[sweep]\n"
    << "P0_grid =" << join(c.P0_grid) << "\n"
    << "alpha_grid =" << join(c.alpha_grid) << "\n\n"
    << "[two-time]\n"
    << "half_width = " << format_double(c.two_time_half_width) << "\n"
    << "dt = " << format_double(c.two_time_dt) << "\n\n"
    << "[convergence]\n"
    << "dims =" << join(std::vector<double>(c.dim_ladder.begin(), c.dim_ladder.end())) << "\n\n"
    << "[integrator]\n"
    << "rtol = " << format_double(c.step.rtol) << "\n"
    << "atol = " << format_double(c.step.atol) << "\n"
    << "max_step = " << format_double(c.step.max_step) << "\n"
    << "min_step = " << format_double(c.step.min_step) << "\n"
    << "max_steps = " << c.step.max_steps << "\n";
  return o.str();
}

std::string config_hash(const ScenarioConfig& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : dump_config(config)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<std::string>& default_config_names() {
  static const std::vector<std::string> names{"fig1b", "fig1d", "fig1f", "fig2",
                                              "fig3", "fig4_weak", "fig4_strong"};
  return names;
}

ScenarioConfig default_config(const std::string& name) {
  if (name == "fig1b") return ScenarioConfig::fig1(Fig1Variant::Combined);
  if (name == "fig1d") return ScenarioConfig::fig1(Fig1Variant::Continuous);
  if (name == "fig1f") return ScenarioConfig::fig1(Fig1Variant::PulsesOnly);
  if (name == "fig2") return ScenarioConfig::fig2();
  if (name == "fig3") return ScenarioConfig::fig3();
  if (name == "fig4_weak") return ScenarioConfig::fig4(Regime::Weak);
  if (name == "fig4_strong") return ScenarioConfig::fig4(Regime::Strong);
  throw InvalidArgument("unknown default config '" + name + "'");
}

}  // namespace dynblock
