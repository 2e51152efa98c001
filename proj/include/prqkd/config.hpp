#pragma once

// Run configuration shared by the config file and the command line. Every
// setting has one key; the file spells it `key = value`, the command line
// spells it `--key value` with underscores turned into dashes. Both paths go
// through apply_setting, so they cannot disagree.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prqkd/experiments.hpp"
#include "prqkd/protocol.hpp"

namespace prqkd {

struct RunConfig {
  SessionConfig session;
  std::optional<std::filesystem::path> output;
  unsigned threads = 1;

  // scan
  double scan_range_ns = 200.0;
  double scan_step_ns = 10.0;

  // verify-uniformity
  std::size_t audit_codes = 1'000'000;
  std::size_t audit_bins = 256;
  std::optional<std::filesystem::path> pattern_file;

  // density
  PhaseDistribution phase_dist;
  int n_max = 20;

  void validate() const;
};

struct SettingInfo {
  std::string key;
  std::string help;
};

const std::vector<SettingInfo>& setting_keys();

// Throws ValidationError for an unknown key or an unparsable value.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

// `key = value` per line; `#` starts a comment.
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

// Canonical key/value listing of every setting, in setting_keys() order.
std::vector<std::pair<std::string, std::string>> describe(const RunConfig& cfg);

std::string flag_name(std::string_view key);

}  // namespace prqkd
