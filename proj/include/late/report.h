#ifndef LATE_REPORT_H_
#define LATE_REPORT_H_

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "late/blocked.h"
#include "late/config.h"
#include "late/estimator.h"
#include "late/simulation.h"

namespace late {

using OrderedJson = nlohmann::ordered_json;

// Shortest-safe text for a double: 17 significant digits; non-finite
// values become Infinity, -Infinity or NaN.
std::string format_number(double value);

// Serializes with every floating value printed by format_number. Non-finite
// numbers are written as the JSON strings "Infinity", "-Infinity", "NaN".
std::string dump_json(const OrderedJson& doc);

OrderedJson estimate_json(const LateResult& result, Design design,
                          const EstimateOptions& options);
OrderedJson pooled_json(const PooledResult& result, Design design,
                        const EstimateOptions& options);
OrderedJson simulation_json(const SimulationSummary& summary);

// One row per method; fields flattened from the JSON report.
std::string estimate_csv(const LateResult& result, Design design);
std::string pooled_csv(const PooledResult& result, Design design);
std::string simulation_csv(const SimulationSummary& summary);

struct Diagnostics {
  std::size_t n = 0;
  std::size_t n1 = 0;
  std::size_t n0 = 0;
  double compliance_treated = 0.0;  // mean receipt among assigned
  double compliance_control = 0.0;
  double first_stage_f = 0.0;
  bool weak_instrument = false;
  // Cluster-level counterparts, clustered designs only.
  std::size_t m = 0;
  double cluster_first_stage_f = 0.0;
  std::vector<std::pair<std::string, std::array<std::size_t, 2>>> block_arms;
};

Diagnostics diagnose(const Dataset& data, const RunConfig& config);
OrderedJson diagnostics_json(const Diagnostics& diag, Design design);

// Writes text to a file; IoError on failure.
void write_report(const std::string& content, const std::filesystem::path& path);

}  // namespace late

#endif  // LATE_REPORT_H_
