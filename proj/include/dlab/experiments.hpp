#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace dlab {

struct ExperimentInfo {
  std::string name;
  std::string description;
  nlohmann::json default_tolerances;
};

/// Stable registry of the named experiments, in registration order.
const std::vector<ExperimentInfo>& list_experiments();

struct RunReport {
  nlohmann::json report;  // experiment, seed, config, metrics, verdicts, pass, runtime
  bool pass{false};
};

/// Runs the named experiment from a JSON config. Mandatory key: "seed".
/// Missing keys fall back to the experiment's registry defaults. When
/// "output_dir" is set, CSV artifacts and the report are written there
/// atomically. Unknown experiment names raise std::invalid_argument.
RunReport run_experiment(const nlohmann::json& config);

/// Effective config after merging registry defaults (user keys win).
nlohmann::json effective_config(const nlohmann::json& config);

/// Structural validation against the published report schema; returns the
/// first problem found, empty string when the shape is valid.
std::string validate_report_shape(const nlohmann::json& report);

}  // namespace dlab
