#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sphero/simulation.h"

namespace sphero {

/// Settings for the certify and synthesize-gains commands.
struct CertificationSettings {
  double k_s{1.0};
  double k_a{5.0};
  int samples{10000};
  /// Required lambda_min(Q_l) for gain synthesis.
  double target{1e-3};
};

struct Scenario {
  ScenarioConfig config;
  CertificationSettings cert;
  /// File the scenario was read from (empty for inline JSON).
  std::string source;
  /// CSV of a custom reference, as written in the file.
  std::string path_file;
};

/// Finds a scenario file. Accepts a path, or a bare name looked up as
/// NAME.json in the working directory, in ./configs and in the shipped
/// configs directory.
std::string resolve_config_path(const std::string& name);

/// Parses a JSON document after resolving its "include" chain. Objects merge
/// key by key with the including file winning; arrays and scalars replace.
/// Relative paths are taken from the directory of the file that names them.
nlohmann::json load_merged_json(const std::string& path);

/// Builds a scenario from an already merged document. Unknown keys and
/// wrongly typed values raise ValidationError with the dotted key path.
Scenario scenario_from_json(const nlohmann::json& j,
                            const std::string& base_dir);

Scenario load_scenario(const std::string& name);

/// A campaign file holds {"scenarios": [...]} whose entries are file names
/// or inline scenario objects; a plain scenario file yields one entry.
std::vector<Scenario> load_campaign(const std::string& name);

/// Fully resolved scenario with defaults applied, plus the controller's
/// perturbed parameters, for exact reproduction of a run.
nlohmann::json resolved_json(const Scenario& s, const RobotParams& nominal);

nlohmann::json params_to_json(const RobotParams& p);

}  // namespace sphero
