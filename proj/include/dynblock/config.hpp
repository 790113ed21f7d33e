#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "dynblock/experiments.hpp"

namespace dynblock {

// Flat key = value text with [sections]; '#' starts a comment. Errors carry
// "source:line:" prefixes. Required keys: [mode] E alpha, [drive] P0 P1 T,
// [run] dim sample_dt, and [sweep] P0_grid for sweep kinds.
ScenarioConfig parse_config(std::istream& in, const std::string& source = "<config>");
ScenarioConfig load_config(const std::string& path);

// Canonical text form; parse_config(dump_config(c)) reproduces c exactly.
std::string dump_config(const ScenarioConfig& config);

// FNV-1a 64 of the canonical text, as "fnv1a64:<16 hex digits>".
std::string config_hash(const ScenarioConfig& config);

// fig1b fig1d fig1f fig2 fig3 fig4_weak fig4_strong
const std::vector<std::string>& default_config_names();
ScenarioConfig default_config(const std::string& name);

ScenarioKind parse_kind(const std::string& text);

// Shortest text that reads back to the same double; "nan"/"inf" for non-finite.
std::string format_double(double v);

}  // namespace dynblock
