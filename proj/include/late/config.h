#ifndef LATE_CONFIG_H_
#define LATE_CONFIG_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "late/blocked.h"
#include "late/clustered.h"
#include "late/dataset_io.h"
#include "late/estimator.h"
#include "late/simulation.h"

namespace late {

enum class Design { kSimple, kBlocked, kClustered, kBlockedClustered };

std::string_view design_name(Design design);
Design parse_design(std::string_view name);

enum class ReportFormat { kJson, kCsv };

ReportFormat parse_format(std::string_view name);

struct RunConfig {
  Design design = Design::kSimple;
  ColumnMap columns;
  EstimateOptions estimate;
  BlockPolicy block_policy = BlockPolicy::kError;
  BlockWeightScheme weight_scheme = BlockWeightScheme::kComplierSize;
  ClusterWeightScheme cluster_weight_scheme = ClusterWeightScheme::kSize;
  std::optional<std::string> output_path;
  ReportFormat format = ReportFormat::kJson;

  // Required columns for the design; throws InvalidConfig.
  void validate() const;
};

// Unknown keys are rejected so that misspelled settings do not pass silently.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

struct SimulationRun {
  SimulationConfig config;
  std::optional<std::string> output_path;
  ReportFormat format = ReportFormat::kCsv;
};

// Accepts the settings at top level or under a "simulation" key.
SimulationRun parse_simulation_config(const nlohmann::json& doc);
SimulationRun load_simulation_config(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace late

#endif  // LATE_CONFIG_H_
