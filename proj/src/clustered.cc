#include "late/clustered.h"

#include <cmath>
#include <map>
#include <string>

#include "late/error.h"

namespace late {

std::string_view cluster_weight_scheme_name(ClusterWeightScheme scheme) {
  switch (scheme) {
    case ClusterWeightScheme::kSize: return "size";
    case ClusterWeightScheme::kUniform: return "uniform";
    case ClusterWeightScheme::kColumn: return "column";
  }
  return "unknown";
}

ClusterWeightScheme parse_cluster_weight_scheme(std::string_view name) {
  if (name == "size") return ClusterWeightScheme::kSize;
  if (name == "uniform") return ClusterWeightScheme::kUniform;
  if (name == "column") return ClusterWeightScheme::kColumn;
  throw LateError(ErrorCode::kInvalidConfig,
                  "unknown cluster weight scheme '" + std::string(name) + "'");
}

std::size_t ClusterDataset::units() const {
  std::size_t total = 0;
  for (std::size_t s : size) total += s;
  return total;
}

ClusterDataset aggregate(const Dataset& data, ClusterWeightScheme scheme) {
  if (!data.cluster_id) {
    throw LateError(ErrorCode::kInvalidConfig, "clustered design requires a cluster column");
  }
  if (scheme == ClusterWeightScheme::kColumn && !data.weight) {
    throw LateError(ErrorCode::kInvalidConfig, "column weights require a weight column");
  }
  data.validate();
  const std::size_t v = data.num_covariates();
  const auto groups = group_rows(*data.cluster_id);

  ClusterDataset cd;
  cd.xbar = Matrix(groups.size(), v);
  std::size_t j = 0;
  for (const auto& [label, rows] : groups) {
    const std::size_t first = rows.front();
    double ysum = 0.0;
    double dsum = 0.0;
    for (std::size_t r : rows) {
      if (data.t[r] != data.t[first]) {
        throw LateError(ErrorCode::kMixedAssignmentInCluster,
                        "cluster '" + label + "' has units in both arms");
      }
      if (scheme == ClusterWeightScheme::kColumn &&
          (*data.weight)[r] != (*data.weight)[first]) {
        throw LateError(ErrorCode::kInconsistentWeightColumn,
                        "weight varies inside cluster '" + label + "'");
      }
      ysum += data.y[r];
      dsum += data.d[r];
      for (std::size_t c = 0; c < v; ++c) cd.xbar(j, c) += data.x(r, c);
    }
    const double nj = static_cast<double>(rows.size());
    for (std::size_t c = 0; c < v; ++c) cd.xbar(j, c) /= nj;
    cd.labels.push_back(label);
    cd.t.push_back(data.t[first]);
    cd.ybar.push_back(ysum / nj);
    cd.dbar.push_back(dsum / nj);
    cd.size.push_back(rows.size());
    switch (scheme) {
      case ClusterWeightScheme::kSize: cd.w.push_back(nj); break;
      case ClusterWeightScheme::kUniform: cd.w.push_back(1.0); break;
      case ClusterWeightScheme::kColumn: cd.w.push_back((*data.weight)[first]); break;
    }
    ++j;
  }
  return cd;
}

PointEstimate estimate_late_clustered(const ClusterDataset& cd) {
  return late_from_fits(fit_itt_weighted(cd.ybar, cd.t, cd.xbar, cd.w),
                        fit_itt_weighted(cd.dbar, cd.t, cd.xbar, cd.w));
}

DbVariance variance_clustered(const PointEstimate& est, std::size_t num_covariates) {
  return variance_db(est.fit_y, est.fit_d, est.tau_late, num_covariates);
}

LateResult analyze_clustered(const Dataset& data, const ClusteredOptions& options) {
  const ClusterDataset cd = aggregate(data, options.cluster_weights);
  const std::size_t v = data.num_covariates();
  PointEstimate est = estimate_late_clustered(cd);

  LateResult result;
  result.n = data.n();
  result.m = cd.m();
  result.n1 = est.fit_y.n1;
  result.n0 = est.fit_y.n0;
  result.num_covariates = v;
  result.tau_itt = est.tau_itt;
  result.pi_itt = est.pi_itt;
  result.tau_late = est.tau_late;
  result.warnings = est.warnings;
  result.first_stage_f = first_stage_f(cd.dbar, cd.t);
  if (result.first_stage_f < kWeakInstrumentF) {
    add_warning(result.warnings, kWarnWeakInstrument);
  }
  result.df = static_cast<double>(cd.m()) - static_cast<double>(v) - 2.0;

  const DbVariance db = variance_clustered(est, v);
  result.components = db.components;
  const double critical =
      critical_value(options.estimate.alpha, result.df, options.estimate.reference);
  auto record = [&](VarianceMethod method, double variance) {
    MethodEstimate m;
    m.variance = variance;
    m.se = std::sqrt(variance);
    m.inference = infer_with_critical(result.tau_late, variance, critical, result.df,
                                      options.estimate.reference);
    result.methods[method] = m;
  };
  for (VarianceMethod method : options.estimate.methods) {
    switch (method) {
      case VarianceMethod::kDb:
        record(method, db.variance);
        break;
      case VarianceMethod::kDbBounded: {
        const BoundedVariance bounded = variance_db_bounded(db, cd.m());
        if (bounded.floored) add_warning(result.warnings, kWarnFlooredVariance);
        record(method, bounded.variance);
        break;
      }
      case VarianceMethod::kIv:
        add_warning(result.warnings, kWarnIvUnavailable);
        break;
    }
  }
  return result;
}

namespace {

// Failures a block policy may absorb; data errors always propagate.
bool block_recoverable(ErrorCode code) {
  return is_numerical(code) || code == ErrorCode::kDegenerateArm ||
         code == ErrorCode::kEmptyArm;
}

}  // namespace

PooledResult analyze_blocked_clustered(const Dataset& data,
                                       const ClusteredOptions& options) {
  if (!data.block_id) {
    throw LateError(ErrorCode::kInvalidConfig, "blocked design requires a block column");
  }
  if (!data.cluster_id) {
    throw LateError(ErrorCode::kInvalidConfig, "clustered design requires a cluster column");
  }
  data.validate();
  std::map<std::string, std::string> home;
  for (std::size_t i = 0; i < data.n(); ++i) {
    auto [it, inserted] = home.emplace((*data.cluster_id)[i], (*data.block_id)[i]);
    if (!inserted && it->second != (*data.block_id)[i]) {
      throw LateError(ErrorCode::kDomainError,
                      "cluster '" + it->first + "' spans more than one block");
    }
  }

  const std::size_t v = data.num_covariates();
  std::vector<BlockResult> blocks;
  std::vector<DroppedBlock> dropped;
  std::vector<std::string> warnings;
  std::size_t clusters_in_model = 0;
  for (const auto& [label, rows] : group_rows(*data.block_id)) {
    try {
      const ClusterDataset cd = aggregate(data.subset(rows), options.cluster_weights);
      PointEstimate est = estimate_late_clustered(cd);
      const DbVariance db = variance_clustered(est, v);
      BlockResult result;
      result.label = label;
      result.n = rows.size();
      result.m = cd.m();
      result.n1 = est.fit_y.n1;
      result.n0 = est.fit_y.n0;
      result.tau_itt = est.tau_itt;
      result.pi_itt = est.pi_itt;
      result.tau_late = est.tau_late;
      result.var_qbar = db.variance;
      result.var_bounded = variance_db_bounded(db, cd.m()).variance;
      result.components = db.components;
      for (const std::string& w : est.warnings) add_warning(warnings, w);
      clusters_in_model += cd.m();
      blocks.push_back(std::move(result));
    } catch (const LateError& error) {
      if (!block_recoverable(error.code())) throw;
      if (options.policy == BlockPolicy::kError) {
        throw LateError(error.code(), "block '" + label + "': " + error.message());
      }
      dropped.push_back({label, std::string(error.what())});
      add_warning(warnings, kWarnDroppedBlock);
    }
  }
  if (blocks.empty()) {
    throw LateError(ErrorCode::kAllBlocksDropped, "every block was dropped");
  }

  const std::size_t h = blocks.size();
  PooledResult result = pool(std::move(blocks), options.scheme,
                             static_cast<double>(clusters_in_model), v, h);
  for (const std::string& w : warnings) add_warning(result.warnings, w);
  result.dropped = std::move(dropped);
  result.n = data.n();
  result.m = home.size();
  const ClusterDataset all = aggregate(data, options.cluster_weights);
  result.first_stage_f = first_stage_f(all.dbar, all.t);
  if (result.first_stage_f < kWeakInstrumentF) {
    add_warning(result.warnings, kWarnWeakInstrument);
  }
  attach_pooled_inference(result, options.estimate);
  return result;
}

}  // namespace late
