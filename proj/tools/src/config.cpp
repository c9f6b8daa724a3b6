#include "venttsel/app/config.hpp"

#include "venttsel/manufactured.hpp"
#include "venttsel/mesh.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace venttsel::app {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& rule, const std::string& msg) { throw Error(rule, msg); }

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) fail("config.unknown_key", "unknown key '" + key + "' in " + where);
  }
}

double number(const json& j, const std::string& name) {
  if (!j.is_number()) fail("config.type", "'" + name + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail("config.type", "'" + name + "' must be finite");
  return v;
}

long integer(const json& j, const std::string& name) {
  if (!j.is_number_integer()) fail("config.type", "'" + name + "' must be an integer");
  return j.get<long>();
}

const json& required(const json& j, const char* key) {
  if (!j.contains(key)) fail("config.missing", std::string("missing required key '") + key + "'");
  return j.at(key);
}

std::vector<Point> parse_vertices(const json& j) {
  if (!j.is_array()) fail("config.type", "'polygon' must be an array of [x, y] pairs");
  std::vector<Point> out;
  for (const auto& v : j) {
    if (!v.is_array() || v.size() != 2) fail("config.type", "'polygon' entries must be [x, y] pairs");
    out.emplace_back(number(v[0], "polygon"), number(v[1], "polygon"));
  }
  return out;
}

BoundaryCoefficient parse_b(const json& j, const Polygon& p) {
  BoundaryCoefficient b;
  if (j.is_number()) {
    b.per_side = {number(j, "b")};
  } else if (j.is_array()) {
    for (const auto& v : j) b.per_side.push_back(number(v, "b"));
    if (b.per_side.size() != p.size()) {
      fail("coefficient.b_sides", "'b' has " + std::to_string(b.per_side.size()) + " entries but the polygon has " +
                                      std::to_string(p.size()) + " sides");
    }
    if (p.reoriented() && b.per_side.size() > 1) {
      fail("coefficient.b_sides", "per-side 'b' needs the polygon vertices in counterclockwise order");
    }
  } else {
    fail("config.type", "'b' must be a number or an array with one value per side");
  }
  return b;
}

}  // namespace

double RunConfig::grading() const { return mesh.grading_auto ? default_grading(sigma) : mesh.grading_q; }

std::vector<std::string> problem_names() {
  std::vector<std::string> out = manufactured_presets();
  out.emplace_back("benchmark");
  return out;
}

RunConfig parse_config(const json& j) {
  if (!j.is_object()) fail("config.type", "the config must be a JSON object");
  only_keys(j, "config", {"polygon", "s", "b", "sigma", "problem", "mesh", "solver", "output", "seed", "check"});
  RunConfig c;

  c.vertices = parse_vertices(required(j, "polygon"));
  c.polygon = build_polygon(c.vertices);
  if (c.polygon.reoriented()) c.warnings.emplace_back("polygon given clockwise; reoriented");

  c.problem = required(j, "problem").is_string() ? j.at("problem").get<std::string>() : "";
  const auto names = problem_names();
  if (std::find(names.begin(), names.end(), c.problem) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    fail("config.problem", "'problem' must be one of: " + list);
  }

  c.s = number(required(j, "s"), "s");
  c.b = j.contains("b") ? parse_b(j.at("b"), c.polygon) : BoundaryCoefficient::constant(1.0);

  const json sigma = j.value("sigma", json("auto"));
  if (sigma.is_string()) {
    if (sigma.get<std::string>() != "auto") fail("config.type", "'sigma' must be a number or \"auto\"");
    const WeightWindow w = sigma_window(c.polygon);
    if (w.empty()) fail("sigma.window", "the weight window 1 - pi/alpha < sigma < 1/2 is empty for this polygon");
    c.sigma_auto = true;
    c.sigma = w.midpoint();
  } else {
    c.sigma = number(sigma, "sigma");
  }

  ProblemSpec spec;
  spec.s = c.s;
  spec.b = c.b;
  spec.sigma = c.sigma;
  spec.validate(c.polygon, true);
  if (!spec.regularity_regime()) {
    c.warnings.emplace_back("s >= 3/4: boundary H2 regularity is not expected; rate targets do not apply");
  }

  if (j.contains("mesh")) {
    const json& m = j.at("mesh");
    if (!m.is_object()) fail("config.type", "'mesh' must be an object");
    only_keys(m, "mesh", {"h", "grading_q", "levels", "reference_levels"});
    if (m.contains("h")) c.mesh.h = number(m.at("h"), "mesh.h");
    if (m.contains("grading_q")) {
      const json& q = m.at("grading_q");
      if (q.is_string() && q.get<std::string>() == "auto") {
        c.mesh.grading_auto = true;
      } else {
        c.mesh.grading_q = number(q, "mesh.grading_q");
      }
    }
    if (m.contains("levels")) c.mesh.levels = static_cast<int>(integer(m.at("levels"), "mesh.levels"));
    if (m.contains("reference_levels")) {
      c.mesh.reference_levels = static_cast<int>(integer(m.at("reference_levels"), "mesh.reference_levels"));
    }
  }
  if (!(c.mesh.h > 0.0)) fail("mesh.h_positive", "mesh.h must be positive");
  if (c.mesh.h > c.polygon.shortest_side()) {
    std::ostringstream os;
    os << "mesh.h = " << c.mesh.h << " exceeds the shortest side " << c.polygon.shortest_side();
    fail("mesh.h_too_large", os.str());
  }
  if (c.mesh.grading_auto && !(c.sigma > 0.0)) {
    fail("mesh.grading", "grading_q \"auto\" needs sigma > 0 (q = 1 / (1 - sigma))");
  }
  if (!(c.grading() >= 1.0)) fail("mesh.grading", "mesh.grading_q must be >= 1");
  if (c.mesh.levels < 1) fail("mesh.levels", "mesh.levels must be >= 1");
  if (c.mesh.reference_levels < 1) fail("mesh.reference_levels", "mesh.reference_levels must be >= 1");

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    if (!s.is_object()) fail("config.type", "'solver' must be an object");
    only_keys(s, "solver", {"tol", "maxit"});
    if (s.contains("tol")) c.solver.tol = number(s.at("tol"), "solver.tol");
    if (s.contains("maxit")) c.solver.maxit = integer(s.at("maxit"), "solver.maxit");
  }
  if (!(c.solver.tol > 0.0)) fail("solver.tol", "solver.tol must be positive");
  if (c.solver.maxit < 0) fail("solver.maxit", "solver.maxit must be >= 0 (0 selects 10 * unknowns)");

  if (j.contains("output")) {
    const json& o = j.at("output");
    if (!o.is_object()) fail("config.type", "'output' must be an object");
    only_keys(o, "output", {"directory", "dump_fields"});
    if (o.contains("directory")) {
      if (!o.at("directory").is_string()) fail("config.type", "'output.directory' must be a string");
      c.output_dir = o.at("directory").get<std::string>();
    }
    if (o.contains("dump_fields")) {
      if (!o.at("dump_fields").is_boolean()) fail("config.type", "'output.dump_fields' must be a boolean");
      c.dump_fields = o.at("dump_fields").get<bool>();
    }
  }

  if (j.contains("seed")) {
    const long seed = integer(j.at("seed"), "seed");
    if (seed < 0) fail("config.seed", "'seed' must be a nonnegative integer");
    c.seed = static_cast<std::uint64_t>(seed);
  }

  if (j.contains("check")) {
    const json& k = j.at("check");
    if (!k.is_object()) fail("config.type", "'check' must be an object");
    only_keys(k, "check", {"fields", "oracle"});
    if (k.contains("fields")) c.check.fields = static_cast<int>(integer(k.at("fields"), "check.fields"));
    if (k.contains("oracle")) {
      if (!k.at("oracle").is_boolean()) fail("config.type", "'check.oracle' must be a boolean");
      c.check.oracle = k.at("oracle").get<bool>();
    }
    if (c.check.fields < 1) fail("check.fields", "check.fields must be >= 1");
  }

  for (const auto& w : c.warnings) spdlog::warn("{}", w);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("config.read", "cannot read config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail("config.parse", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json poly = json::array();
  for (const auto& v : c.polygon.vertices()) poly.push_back({v.x(), v.y()});
  json b = c.b.per_side.size() == 1 ? json(c.b.per_side[0]) : json(c.b.per_side);
  return {{"polygon", poly},
          {"s", c.s},
          {"b", b},
          {"sigma", c.sigma},
          {"problem", c.problem},
          {"mesh",
           {{"h", c.mesh.h},
            {"grading_q", c.grading()},
            {"levels", c.mesh.levels},
            {"reference_levels", c.mesh.reference_levels}}},
          {"solver", {{"tol", c.solver.tol}, {"maxit", c.solver.maxit}}},
          {"output", {{"directory", c.output_dir.string()}, {"dump_fields", c.dump_fields}}},
          {"check", {{"fields", c.check.fields}, {"oracle", c.check.oracle}}},
          {"seed", c.seed}};
}

}  // namespace venttsel::app
