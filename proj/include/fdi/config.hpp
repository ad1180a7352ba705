#pragma once

#include "fdi/errors.hpp"
#include "fdi/experiment.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace fdi {

/// Invalid experiment configuration. The message starts with the offending key path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ExperimentConfig {
  Scenario scenario;
  std::optional<std::filesystem::path> scores_path;  // output.scores
};

/// Builds and validates a scenario from the JSON document. Relative paths resolve
/// against `base_dir`. Unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// Reads and parses a config file.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Seeded standard-normal M x K matrix; throws RankError if it is not full column rank.
Eigen::MatrixXd synthetic_jacobian(Eigen::Index m, Eigen::Index k, std::uint64_t seed);

}  // namespace fdi
