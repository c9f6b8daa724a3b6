#include "venttsel/app/commands.hpp"
#include "venttsel/app/config.hpp"

#include "CLI11.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

using venttsel::app::error_json;

int report(const std::string& rule, const std::string& message, int code) {
  std::cerr << error_json(rule, message).dump() << '\n';
  return code;
}

// VENTTSEL_LOG in {quiet, info, debug}; unset means info.
void setup_logging() {
  auto logger = spdlog::stderr_color_mt("venttsel");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("VENTTSEL_LOG");
  const std::string level = env ? env : "info";
  if (level == "quiet") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    throw venttsel::Error("env.venttsel_log", "VENTTSEL_LOG must be one of quiet, info, debug (got '" + level + "')");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite elements for the nonlocal Venttsel problem on polygons"};
  std::string command, config_path, out_dir;
  int threads = 1;
  app.add_option("command", command, "solve | converge | decompose | check")
      ->required()
      ->check(CLI::IsMember(venttsel::app::command_names()));
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--threads", threads, "threads for the nonlocal assembly")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory (overrides output.directory)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("cli.usage", e.what(), venttsel::app::kExitError);
  }

  try {
    setup_logging();
    const venttsel::app::RunConfig config = venttsel::app::load_config(config_path);
    venttsel::app::RunOptions options;
    options.threads = threads;
    options.out = out_dir;
    const auto result = venttsel::app::run_command(command, config, options);
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : result.files) files.push_back(f.string());
    std::cout << nlohmann::json{{"command", command}, {"files", files}, {"exit_code", result.exit_code}}.dump() << '\n';
    return result.exit_code;
  } catch (const venttsel::Error& e) {
    return report(e.rule(), e.what(), venttsel::app::kExitError);
  } catch (const std::exception& e) {
    return report("internal", e.what(), venttsel::app::kExitError);
  }
}
