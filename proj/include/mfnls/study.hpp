#pragma once

#include <filesystem>
#include <iosfwd>

#include "mfnls/config.hpp"

namespace mfnls {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_validation = 2,
  exit_numeric = 3,
  exit_budget = 4,
};

/// Runs the configured study, writing <kind>.csv and <kind>.json (plus binary snapshots
/// when requested) into the output directory. Diagnostics go to `err`.
int run_study(const StudyConfig& cfg, std::ostream& out, std::ostream& err);

/// Loads, validates and runs; maps every error class to its exit code. A nonempty
/// output_override replaces the configured output directory.
int run_config_file(const std::filesystem::path& path, const std::filesystem::path& output_override,
                    std::ostream& out, std::ostream& err);

}  // namespace mfnls
