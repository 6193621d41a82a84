#include "late/report.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "late/clustered.h"
#include "late/error.h"

namespace late {

std::string format_number(double value) {
  if (std::isnan(value)) return "NaN";
  if (std::isinf(value)) return value > 0 ? "Infinity" : "-Infinity";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

namespace {

void dump_into(const OrderedJson& node, std::string& out, int depth) {
  const std::string pad(2 * static_cast<std::size_t>(depth + 1), ' ');
  const std::string close_pad(2 * static_cast<std::size_t>(depth), ' ');
  switch (node.type()) {
    case OrderedJson::value_t::object: {
      if (node.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& item : node.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + OrderedJson(item.key()).dump() + ": ";
        dump_into(item.value(), out, depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case OrderedJson::value_t::array: {
      if (node.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : node) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        dump_into(item, out, depth + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case OrderedJson::value_t::number_float: {
      const double v = node.get<double>();
      out += std::isfinite(v) ? format_number(v) : "\"" + format_number(v) + "\"";
      return;
    }
    default:
      out += node.dump();
      return;
  }
}

OrderedJson components_json(const ArmComponents& c) {
  OrderedJson out;
  out["s2_ry"] = c.s2_ry;
  out["s2_rd"] = c.s2_rd;
  out["s2_ryd"] = c.s2_ryd;
  out["s2_r"] = c.s2_r;
  return out;
}

OrderedJson components_json(const VarianceComponents& c) {
  OrderedJson out;
  out["treated"] = components_json(c.treated);
  out["control"] = components_json(c.control);
  return out;
}

OrderedJson methods_json(const std::map<VarianceMethod, MethodEstimate>& methods) {
  OrderedJson out = OrderedJson::object();
  for (const auto& [method, m] : methods) {
    OrderedJson entry;
    entry["variance"] = m.variance;
    entry["se"] = m.se;
    entry["ci_lower"] = m.inference.ci_lower;
    entry["ci_upper"] = m.inference.ci_upper;
    entry["t_stat"] = m.inference.t_stat;
    entry["p_value"] = m.inference.p_value;
    out[std::string(method_name(method))] = entry;
  }
  return out;
}

OrderedJson warnings_json(const std::vector<std::string>& warnings) {
  OrderedJson out = OrderedJson::array();
  for (const std::string& w : warnings) out.push_back(w);
  return out;
}

bool clustered(Design design) {
  return design == Design::kClustered || design == Design::kBlockedClustered;
}

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

constexpr const char* kCsvHeader =
    "design,method,n,m,h,n1,n0,num_covariates,tau_itt,pi_itt,tau_late,variance,se,"
    "ci_lower,ci_upper,t_stat,p_value,df,first_stage_f,warnings\n";

std::string csv_method_row(Design design, VarianceMethod method, const MethodEstimate& m,
                           const std::string& counts, double tau_itt, double pi_itt,
                           double tau_late, double df, double f,
                           const std::vector<std::string>& warnings) {
  std::string row;
  row += std::string(design_name(design)) + "," + std::string(method_name(method)) + ",";
  row += counts;
  for (double v : {tau_itt, pi_itt, tau_late, m.variance, m.se, m.inference.ci_lower,
                   m.inference.ci_upper, m.inference.t_stat, m.inference.p_value, df, f}) {
    row += format_number(v) + ",";
  }
  row += join(warnings, ';') + "\n";
  return row;
}

}  // namespace

std::string dump_json(const OrderedJson& doc) {
  std::string out;
  dump_into(doc, out, 0);
  out += "\n";
  return out;
}

OrderedJson estimate_json(const LateResult& result, Design design,
                          const EstimateOptions& options) {
  OrderedJson out;
  out["design"] = design_name(design);
  out["n"] = result.n;
  if (clustered(design)) out["m"] = result.m;
  out["n1"] = result.n1;
  out["n0"] = result.n0;
  out["num_covariates"] = result.num_covariates;
  out["tau_itt"] = result.tau_itt;
  out["pi_itt"] = result.pi_itt;
  out["tau_late"] = result.tau_late;
  out["methods"] = methods_json(result.methods);
  out["df"] = result.df;
  out["reference"] = reference_name(options.reference);
  out["alpha"] = options.alpha;
  out["first_stage_f"] = result.first_stage_f;
  out["variance_components"] = components_json(result.components);
  out["warnings"] = warnings_json(result.warnings);
  return out;
}

OrderedJson pooled_json(const PooledResult& result, Design design,
                        const EstimateOptions& options) {
  OrderedJson out;
  out["design"] = design_name(design);
  out["n"] = result.n;
  if (clustered(design)) out["m"] = result.m;
  out["h"] = result.per_block.size();
  out["num_covariates"] = result.num_covariates;
  out["weight_scheme"] = block_weight_scheme_name(result.scheme);
  out["tau_itt"] = result.tau_itt;
  out["pi_itt"] = result.pi_itt;
  out["tau_late"] = result.tau_late;
  out["methods"] = methods_json(result.methods);
  out["df"] = result.df;
  out["reference"] = reference_name(options.reference);
  out["alpha"] = options.alpha;
  out["first_stage_f"] = result.first_stage_f;
  // Components are per block for pooled designs.
  out["variance_components"] = nullptr;
  out["warnings"] = warnings_json(result.warnings);
  OrderedJson blocks = OrderedJson::array();
  for (const BlockResult& b : result.per_block) {
    OrderedJson entry;
    entry["label"] = b.label;
    entry["n"] = b.n;
    if (clustered(design)) entry["m"] = b.m;
    entry["n1"] = b.n1;
    entry["n0"] = b.n0;
    entry["tau_itt"] = b.tau_itt;
    entry["pi_itt"] = b.pi_itt;
    entry["tau_late"] = b.tau_late;
    entry["variance"] = b.var_qbar;
    entry["variance_bounded"] = b.var_bounded;
    entry["weight"] = b.weight;
    entry["variance_components"] = components_json(b.components);
    blocks.push_back(entry);
  }
  out["per_block"] = blocks;
  OrderedJson dropped = OrderedJson::array();
  for (const DroppedBlock& d : result.dropped) {
    dropped.push_back(OrderedJson{{"label", d.label}, {"reason", d.reason}});
  }
  out["dropped_blocks"] = dropped;
  return out;
}

OrderedJson simulation_json(const SimulationSummary& summary) {
  const SimulationConfig& cfg = summary.config;
  OrderedJson config;
  config["n"] = cfg.n;
  config["p"] = cfg.p;
  config["dbar0"] = cfg.dbar0;
  config["dbar1"] = cfg.dbar1;
  config["rho_delta_y0"] = cfg.rho_delta_y0;
  config["r2_y0x"] = cfg.r2_y0x;
  config["rho_delta_theta"] = cfg.rho_delta_theta;
  config["sigma_theta2_rule"] = cfg.sigma_theta2_rule;
  config["with_covariate"] = cfg.with_covariate;
  config["num_datasets"] = cfg.num_datasets;
  config["reps"] = cfg.reps;
  config["alpha"] = cfg.alpha;
  config["seed"] = cfg.seed;
  config["inference"] = reference_name(cfg.reference);

  auto method_entry = [](const MethodSummary& m) {
    OrderedJson entry;
    entry["method"] = method_name(m.method);
    entry["bias"] = m.bias;
    entry["coverage"] = m.coverage;
    entry["true_se"] = m.true_se;
    entry["mean_est_se"] = m.mean_est_se;
    entry["rejected_replications"] = m.rejected_replications;
    return entry;
  };
  OrderedJson out;
  out["config"] = config;
  out["n1"] = summary.n1;
  OrderedJson methods = OrderedJson::array();
  for (const MethodSummary& m : summary.methods) methods.push_back(method_entry(m));
  out["methods"] = methods;
  OrderedJson datasets = OrderedJson::array();
  for (const DatasetSummary& ds : summary.datasets) {
    OrderedJson entry;
    entry["index"] = ds.index;
    entry["tau_10"] = ds.tau_10;
    entry["pi_itt"] = ds.pi_itt;
    char hex[24];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(ds.checksum));
    entry["checksum"] = hex;
    OrderedJson ms = OrderedJson::array();
    for (const MethodSummary& m : ds.methods) ms.push_back(method_entry(m));
    entry["methods"] = ms;
    datasets.push_back(entry);
  }
  out["datasets"] = datasets;
  return out;
}

std::string estimate_csv(const LateResult& result, Design design) {
  std::string out = kCsvHeader;
  std::string counts = std::to_string(result.n) + ",";
  counts += clustered(design) ? std::to_string(result.m) + "," : ",";
  counts += ",";  // h
  counts += std::to_string(result.n1) + "," + std::to_string(result.n0) + "," +
            std::to_string(result.num_covariates) + ",";
  for (const auto& [method, m] : result.methods) {
    out += csv_method_row(design, method, m, counts, result.tau_itt, result.pi_itt,
                          result.tau_late, result.df, result.first_stage_f, result.warnings);
  }
  return out;
}

std::string pooled_csv(const PooledResult& result, Design design) {
  std::string out = kCsvHeader;
  std::size_t n1 = 0;
  std::size_t n0 = 0;
  for (const BlockResult& b : result.per_block) {
    n1 += b.n1;
    n0 += b.n0;
  }
  std::string counts = std::to_string(result.n) + ",";
  counts += clustered(design) ? std::to_string(result.m) + "," : ",";
  counts += std::to_string(result.per_block.size()) + ",";
  counts += std::to_string(n1) + "," + std::to_string(n0) + "," +
            std::to_string(result.num_covariates) + ",";
  for (const auto& [method, m] : result.methods) {
    out += csv_method_row(design, method, m, counts, result.tau_itt, result.pi_itt,
                          result.tau_late, result.df, result.first_stage_f, result.warnings);
  }
  return out;
}

std::string simulation_csv(const SimulationSummary& summary) {
  const SimulationConfig& cfg = summary.config;
  std::string out =
      "method,bias,coverage,true_se,mean_est_se,rejected_replications,n,n1,p,dbar0,dbar1,"
      "with_covariate,num_datasets,reps,seed\n";
  for (const MethodSummary& m : summary.methods) {
    out += std::string(method_name(m.method)) + ",";
    for (double v : {m.bias, m.coverage, m.true_se, m.mean_est_se}) {
      out += format_number(v) + ",";
    }
    out += std::to_string(m.rejected_replications) + "," + std::to_string(cfg.n) + "," +
           std::to_string(summary.n1) + "," + format_number(cfg.p) + "," +
           format_number(cfg.dbar0) + "," + format_number(cfg.dbar1) + "," +
           (cfg.with_covariate ? "true" : "false") + "," +
           std::to_string(cfg.num_datasets) + "," + std::to_string(cfg.reps) + "," +
           std::to_string(cfg.seed) + "\n";
  }
  return out;
}

Diagnostics diagnose(const Dataset& data, const RunConfig& config) {
  data.validate();
  Diagnostics diag;
  diag.n = data.n();
  diag.n1 = data.treated_count();
  diag.n0 = diag.n - diag.n1;
  double sums[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < data.n(); ++i) sums[data.t[i]] += data.d[i];
  diag.compliance_treated = sums[1] / static_cast<double>(diag.n1);
  diag.compliance_control = sums[0] / static_cast<double>(diag.n0);
  diag.first_stage_f = first_stage_f(data.d, data.t);
  double screened = diag.first_stage_f;
  if (clustered(config.design)) {
    const ClusterDataset cd = aggregate(data, config.cluster_weight_scheme);
    diag.m = cd.m();
    diag.cluster_first_stage_f = first_stage_f(cd.dbar, cd.t);
    screened = diag.cluster_first_stage_f;
  }
  diag.weak_instrument = screened < kWeakInstrumentF;
  if (data.block_id) {
    for (const auto& [label, rows] : group_rows(*data.block_id)) {
      std::array<std::size_t, 2> arms{0, 0};
      for (std::size_t r : rows) ++arms[static_cast<std::size_t>(data.t[r])];
      diag.block_arms.emplace_back(label, arms);
    }
  }
  return diag;
}

OrderedJson diagnostics_json(const Diagnostics& diag, Design design) {
  OrderedJson out;
  out["design"] = design_name(design);
  out["n"] = diag.n;
  out["n1"] = diag.n1;
  out["n0"] = diag.n0;
  out["compliance_treated"] = diag.compliance_treated;
  out["compliance_control"] = diag.compliance_control;
  out["pi_itt_unadjusted"] = diag.compliance_treated - diag.compliance_control;
  out["first_stage_f"] = diag.first_stage_f;
  if (clustered(design)) {
    out["m"] = diag.m;
    out["cluster_first_stage_f"] = diag.cluster_first_stage_f;
  }
  out["weak_instrument_threshold"] = kWeakInstrumentF;
  out["weak_instrument"] = diag.weak_instrument;
  if (!diag.block_arms.empty()) {
    OrderedJson blocks = OrderedJson::array();
    for (const auto& [label, arms] : diag.block_arms) {
      blocks.push_back(OrderedJson{{"label", label}, {"n1", arms[1]}, {"n0", arms[0]}});
    }
    out["blocks"] = blocks;
  }
  return out;
}

void write_report(const std::string& content, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LateError(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  out << content;
  out.flush();
  if (!out) throw LateError(ErrorCode::kIoError, "write to '" + path.string() + "' failed");
}

}  // namespace late
