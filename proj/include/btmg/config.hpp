#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "btmg/harness.hpp"

namespace btmg {

// Flat "section.key" -> raw value map.  Lines are `key = value` under
// `[section]` headers; blank lines and full-line #/; comments are skipped.
// Malformed lines throw with the line number.
std::map<std::string, std::string> parse_ini(const std::string& text);

// Overwrites cfg fields from the parsed map.  Unknown keys or unparseable
// values throw.
void apply_config(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv);

// Canonical INI rendering of every effective setting, fixed order, %.17g
// doubles.  Feeding the snapshot back through apply_config reproduces the
// same config.
std::string config_snapshot(const ExperimentConfig& cfg);

// FNV-1a 64-bit over the snapshot text, 16 lowercase hex digits.
std::string config_hash(const std::string& snapshot);

ExperimentConfig load_config_text(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

}  // namespace btmg
