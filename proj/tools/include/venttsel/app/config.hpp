#pragma once

#include "venttsel/assembly.hpp"
#include "venttsel/geometry.hpp"
#include "venttsel/solver.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace venttsel::app {

struct MeshConfig {
  double h = 0.25;
  double grading_q = 1.0;
  bool grading_auto = false;  // q = 1 / (1 - sigma) when sigma > 0
  int levels = 4;
  int reference_levels = 2;  // benchmark studies only
};

struct CheckConfig {
  int fields = 100;  // random fields per sampling check
  bool oracle = true;
};

/// Validated run configuration. Every field has been checked against the
/// geometry and ProblemSpec rules; sigma is resolved.
struct RunConfig {
  std::vector<Point> vertices;
  Polygon polygon;
  double s = 0.5;
  BoundaryCoefficient b = BoundaryCoefficient::constant(1.0);
  double sigma = 0.0;
  bool sigma_auto = false;
  std::string problem;
  MeshConfig mesh;
  SolveOptions solver;
  std::filesystem::path output_dir = "out";
  bool dump_fields = false;
  std::uint64_t seed = 0;
  CheckConfig check;
  std::vector<std::string> warnings;

  bool is_benchmark() const { return problem == "benchmark"; }
  double grading() const;
};

/// Problem names accepted in the config: the manufactured presets plus "benchmark".
std::vector<std::string> problem_names();

/// Throws Error("config.*", ...) for malformed input and the core rule
/// identifiers ("sigma.window", "coercivity.b", ...) for invalid data.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& c);

}  // namespace venttsel::app
