#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "enzygen/config.hpp"
#include "enzygen/data.hpp"
#include "enzygen/training.hpp"

namespace enzygen {

// Everything a training run needs, read from a `key = value` file. Relative
// paths resolve against the config file's directory.
struct RunConfig {
  ModelConfig model;
  TrainSchedule schedule;

  std::filesystem::path structures;
  std::filesystem::path alignments;
  std::filesystem::path sites;
  std::filesystem::path substrates;  // optional
  std::filesystem::path pairings;    // optional
  std::filesystem::path splits;      // read if it exists, otherwise computed and written
  std::filesystem::path checkpoint;
  std::filesystem::path loss_log;
  /// Continue from `checkpoint` if it exists.
  bool resume = false;

  double identity_threshold = 0.5;
  SplitFractions split_fractions;
};

/// Every accepted key with its default, one `key = value` per line.
std::string default_run_config_text();
std::vector<std::string> run_config_keys();

/// Throws ConfigError naming the key on unknown or duplicate keys and on
/// unparsable or out-of-range values.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Input paths must exist and output directories must be writable locations.
/// Throws ConfigError naming the key.
void validate_paths(const RunConfig& config);

/// Loads and joins every input named in the config. Splits come from the
/// `splits` file when present; otherwise they are computed (identity
/// clustering, only clusters with known positives eligible for test) and
/// written there.
Dataset build_dataset(const RunConfig& config, const WarningSink& warn = warn_to_stderr);

}  // namespace enzygen
