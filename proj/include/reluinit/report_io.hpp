#pragma once

#include <string>

#include <json.hpp>

#include "reluinit/experiment.hpp"

namespace reluinit {

using ordered_json = nlohmann::ordered_json;

ordered_json to_json(const ExperimentConfig& config);
ordered_json to_json(const MomentPrediction& prediction);
ordered_json to_json(const Verdict& verdict);
ordered_json to_json(const Report& report);
ordered_json to_json(const BoundsReport& report);

/// Serializes with every floating-point number printed to 17 significant
/// digits; non-finite numbers become null.
std::string dump_json(const ordered_json& value, int indent = 2);

/// One row per verdict.
std::string to_csv(const Report& report);
/// One row per inequality family.
std::string to_csv(const BoundsReport& report);

std::string render(const Report& report, OutputFormat format);
std::string render(const BoundsReport& report, OutputFormat format);

}  // namespace reluinit
