#pragma once

#include "venttsel/assembly.hpp"
#include "venttsel/space.hpp"

#include "json.hpp"

#include <random>
#include <string>
#include <vector>

namespace venttsel::app {

/// Random smooth field: cosine modes up to `modes` per direction over the
/// bounding box with N(0, 1) / (1 + j + k) amplitudes. Mesh independent,
/// so quotients over such fields are comparable across refinements.
Vector smooth_random_field(const Mesh& m, std::mt19937_64& rng, int modes = 4);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
};

nlohmann::json to_json(const CheckResult& r);

struct Extremes {
  double min = 0.0;
  double max = 0.0;
};

/// max over fields of friedrichs_ratio.
double max_friedrichs_ratio(const FemSpace& space, int fields, std::uint64_t seed);
/// min and max of E_h[u] / ||u||^2_{V1,h} over random fields.
Extremes rayleigh_extremes(const FemSpace& space, const DiscreteSystem& sys, int fields, std::uint64_t seed);

}  // namespace venttsel::app
