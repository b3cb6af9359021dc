#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "packinglab/mc.hpp"
#include "packinglab/pgfl.hpp"

namespace packinglab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model from the {space, measure, kernel, seed_policy} object. Structural
/// problems raise ConfigError; the model is not validated here.
Model parse_model(const nlohmann::json& j);
nlohmann::json model_to_json(const Model& model);

/// Reads a JSON file; a top-level "model" member is used when present.
nlohmann::json load_json(const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

Box parse_box(const nlohmann::json& j);
nlohmann::json box_to_json(const Box& box);

/// Test-function spec, evaluated at the atoms of `sys`:
///   0.3                                    constant
///   [0.1, 0.5, ...]                        one value per atom
///   {"box": {...}, "inside": a, "outside": b}
///   {"complement_of": [x...]}              1 - h(., x)
TestFunction parse_test_function(const nlohmann::json& j, const AtomicSystem& sys);

/// The same spec as a function of sampled points. Per-atom arrays need a
/// discrete model.
PointFunction parse_point_function(const nlohmann::json& j, const Model& model);

/// Time grid: a number, an array, or {"from", "to", "step"} (inclusive).
std::vector<double> parse_time_grid(const nlohmann::json& j);

SolverMethod parse_method(const std::string& s);
MaternOrder parse_order(const nlohmann::json& j);

/// Reads key from j if present, else returns fallback.
template <class T>
T value_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

}  // namespace packinglab
