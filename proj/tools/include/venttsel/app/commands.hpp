#pragma once

#include "venttsel/app/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace venttsel::app {

struct RunOptions {
  int threads = 1;
  std::filesystem::path out;  // overrides the config directory when set
};

struct RunResult {
  int exit_code = 0;
  std::vector<std::filesystem::path> files;  // final paths written
  nlohmann::json summary;
};

inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;

/// Runs one command and writes its outputs through a staging directory that
/// is renamed into place only on success. Throws on errors; nothing is left
/// in the output directory in that case.
RunResult run_command(const std::string& command, const RunConfig& config, const RunOptions& options = {});

std::vector<std::string> command_names();

/// `{"error": {"rule": ..., "message": ...}}`
nlohmann::json error_json(const std::string& rule, const std::string& message);

}  // namespace venttsel::app
