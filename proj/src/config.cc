#include "late/config.h"

#include <fstream>
#include <initializer_list>

#include "late/error.h"

namespace late {

using nlohmann::json;

std::string_view design_name(Design design) {
  switch (design) {
    case Design::kSimple: return "simple";
    case Design::kBlocked: return "blocked";
    case Design::kClustered: return "clustered";
    case Design::kBlockedClustered: return "blocked_clustered";
  }
  return "unknown";
}

Design parse_design(std::string_view name) {
  if (name == "simple") return Design::kSimple;
  if (name == "blocked") return Design::kBlocked;
  if (name == "clustered") return Design::kClustered;
  if (name == "blocked_clustered") return Design::kBlockedClustered;
  throw LateError(ErrorCode::kInvalidConfig, "unknown design '" + std::string(name) + "'");
}

ReportFormat parse_format(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  throw LateError(ErrorCode::kInvalidConfig, "unknown format '" + std::string(name) + "'");
}

namespace {

[[noreturn]] void invalid(const std::string& message) {
  throw LateError(ErrorCode::kInvalidConfig, message);
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                std::string_view where) {
  if (!obj.is_object()) invalid(std::string(where) + " must be a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (std::string_view key : allowed) known = known || item.key() == key;
    if (!known) invalid("unknown key '" + item.key() + "' in " + std::string(where));
  }
}

template <typename T>
T read(const json& obj, const char* key, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) invalid(std::string("'") + key + "' must be a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) invalid(std::string("'") + key + "' must be true or false");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_unsigned()) {
        invalid(std::string("'") + key + "' must be a nonnegative integer");
      }
    } else {
      if (!it->is_string()) invalid(std::string("'") + key + "' must be a string");
    }
    return it->get<T>();
  } catch (const json::exception& e) {
    invalid(std::string("'") + key + "': " + e.what());
  }
}

std::optional<std::string> read_optional_string(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) invalid(std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

std::vector<VarianceMethod> read_methods(const json& obj,
                                         std::vector<VarianceMethod> fallback) {
  const auto it = obj.find("variance_methods");
  if (it == obj.end()) return fallback;
  if (!it->is_array() || it->empty()) {
    invalid("'variance_methods' must be a nonempty array of names");
  }
  std::vector<VarianceMethod> methods;
  for (const json& item : *it) {
    if (!item.is_string()) invalid("'variance_methods' entries must be strings");
    const VarianceMethod m = parse_method(item.get<std::string>());
    for (VarianceMethod seen : methods) {
      if (seen == m) invalid("duplicate variance method '" + item.get<std::string>() + "'");
    }
    methods.push_back(m);
  }
  return methods;
}

Reference parse_reference(std::string_view name) {
  if (name == "t") return Reference::kT;
  if (name == "z") return Reference::kZ;
  invalid("inference must be 't' or 'z', got '" + std::string(name) + "'");
}

ColumnMap parse_columns(const json& obj) {
  check_keys(obj,
             {"outcome", "receipt", "assignment", "covariates", "block", "cluster", "weight"},
             "columns");
  ColumnMap columns;
  columns.outcome = read<std::string>(obj, "outcome", columns.outcome);
  columns.receipt = read<std::string>(obj, "receipt", columns.receipt);
  columns.assignment = read<std::string>(obj, "assignment", columns.assignment);
  if (const auto it = obj.find("covariates"); it != obj.end()) {
    if (!it->is_array()) invalid("'covariates' must be an array of column names");
    for (const json& item : *it) {
      if (!item.is_string()) invalid("'covariates' entries must be strings");
      columns.covariates.push_back(item.get<std::string>());
    }
  }
  columns.block = read_optional_string(obj, "block");
  columns.cluster = read_optional_string(obj, "cluster");
  columns.weight = read_optional_string(obj, "weight");
  return columns;
}

}  // namespace

void RunConfig::validate() const {
  const bool blocked = design == Design::kBlocked || design == Design::kBlockedClustered;
  const bool clustered =
      design == Design::kClustered || design == Design::kBlockedClustered;
  if (blocked && !columns.block) {
    invalid(std::string(design_name(design)) + " design requires a block column");
  }
  if (clustered && !columns.cluster) {
    invalid(std::string(design_name(design)) + " design requires a cluster column");
  }
  if (clustered && cluster_weight_scheme == ClusterWeightScheme::kColumn &&
      !columns.weight) {
    invalid("cluster_weight_scheme 'column' requires a weight column");
  }
  if (!(estimate.alpha > 0.0 && estimate.alpha < 1.0)) invalid("alpha must lie in (0, 1)");
  if (estimate.methods.empty()) invalid("no variance methods requested");
}

RunConfig parse_run_config(const json& doc) {
  check_keys(doc,
             {"design", "columns", "variance_methods", "inference", "alpha",
              "block_policy", "weight_scheme", "cluster_weight_scheme", "output_path",
              "format"},
             "run configuration");
  RunConfig cfg;
  cfg.design = parse_design(read<std::string>(doc, "design", "simple"));
  if (const auto it = doc.find("columns"); it != doc.end()) cfg.columns = parse_columns(*it);
  cfg.estimate.methods = read_methods(doc, cfg.estimate.methods);
  cfg.estimate.reference = parse_reference(read<std::string>(doc, "inference", "t"));
  cfg.estimate.alpha = read<double>(doc, "alpha", cfg.estimate.alpha);
  cfg.block_policy = parse_block_policy(read<std::string>(doc, "block_policy", "error"));
  cfg.weight_scheme =
      parse_block_weight_scheme(read<std::string>(doc, "weight_scheme", "complier_size"));
  cfg.cluster_weight_scheme =
      parse_cluster_weight_scheme(read<std::string>(doc, "cluster_weight_scheme", "size"));
  cfg.output_path = read_optional_string(doc, "output_path");
  cfg.format = parse_format(read<std::string>(doc, "format", "json"));
  cfg.validate();
  return cfg;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LateError(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    invalid("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_json_file(path));
}

SimulationRun parse_simulation_config(const json& doc) {
  if (!doc.is_object()) invalid("simulation configuration must be a JSON object");
  const bool nested = doc.contains("simulation");
  const json& body = nested ? doc.at("simulation") : doc;
  // Output settings may sit beside the "simulation" block.
  if (nested) check_keys(doc, {"simulation", "output_path", "format"}, "configuration");
  auto output_source = [&](const char* key) -> const json& {
    return nested && doc.contains(key) ? doc : body;
  };
  check_keys(body,
             {"n", "p", "dbar0", "dbar1", "rho_delta_y0", "r2_y0x", "rho_delta_theta",
              "sigma_theta2_rule", "with_covariate", "num_datasets", "reps", "alpha",
              "seed", "variance_methods", "inference", "output_path", "format"},
             "simulation configuration");
  SimulationRun run;
  SimulationConfig& cfg = run.config;
  cfg.n = read<std::size_t>(body, "n", cfg.n);
  cfg.p = read<double>(body, "p", cfg.p);
  cfg.dbar0 = read<double>(body, "dbar0", cfg.dbar0);
  cfg.dbar1 = read<double>(body, "dbar1", cfg.dbar1);
  cfg.rho_delta_y0 = read<double>(body, "rho_delta_y0", cfg.rho_delta_y0);
  cfg.r2_y0x = read<double>(body, "r2_y0x", cfg.r2_y0x);
  cfg.rho_delta_theta = read<double>(body, "rho_delta_theta", cfg.rho_delta_theta);
  cfg.sigma_theta2_rule = read<double>(body, "sigma_theta2_rule", cfg.sigma_theta2_rule);
  cfg.with_covariate = read<bool>(body, "with_covariate", cfg.with_covariate);
  cfg.num_datasets = read<std::size_t>(body, "num_datasets", cfg.num_datasets);
  cfg.reps = read<std::size_t>(body, "reps", cfg.reps);
  cfg.alpha = read<double>(body, "alpha", cfg.alpha);
  cfg.seed = read<std::uint64_t>(body, "seed", cfg.seed);
  cfg.variance_methods = read_methods(body, cfg.variance_methods);
  cfg.reference = parse_reference(read<std::string>(body, "inference", "t"));
  run.output_path = read_optional_string(output_source("output_path"), "output_path");
  run.format = parse_format(read<std::string>(output_source("format"), "format", "csv"));
  cfg.validate();
  return run;
}

SimulationRun load_simulation_config(const std::filesystem::path& path) {
  return parse_simulation_config(read_json_file(path));
}

}  // namespace late
