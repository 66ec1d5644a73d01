#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "schro/harness.hpp"

namespace schro::cli {

/// Config content that does not match the schema; `field` is a JSON path
/// such as ".rho0.weights[1]".
class SchemaViolation : public std::runtime_error {
 public:
  SchemaViolation(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class FileNotFound : public std::runtime_error {
 public:
  explicit FileNotFound(const std::string& path)
      : std::runtime_error("config file not found: " + path) {}
};

/// Validates a JSON document and builds the experiment config. Unknown keys
/// are rejected. Defaults: eps = 1, tol = 1e-12, method = auto, eta = cost,
/// n = [12], replicates = 1000, seed = 0.
ExperimentConfig parse_config(const nlohmann::json& doc);

ExperimentConfig load_config(const std::string& path);

/// Inverse of parse_config: parse_config(dump_config(c)) == c.
nlohmann::ordered_json dump_config(const ExperimentConfig& config);

bool same_config(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace schro::cli
