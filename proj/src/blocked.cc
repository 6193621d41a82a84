#include "late/blocked.h"

#include <cmath>
#include <string>

#include "late/error.h"

namespace late {

std::string_view block_weight_scheme_name(BlockWeightScheme scheme) {
  switch (scheme) {
    case BlockWeightScheme::kComplierSize: return "complier_size";
    case BlockWeightScheme::kBlockSize: return "block_size";
    case BlockWeightScheme::kUniform: return "uniform";
  }
  return "unknown";
}

BlockWeightScheme parse_block_weight_scheme(std::string_view name) {
  if (name == "complier_size") return BlockWeightScheme::kComplierSize;
  if (name == "block_size") return BlockWeightScheme::kBlockSize;
  if (name == "uniform") return BlockWeightScheme::kUniform;
  throw LateError(ErrorCode::kInvalidConfig,
                  "unknown block weight scheme '" + std::string(name) + "'");
}

std::string_view block_policy_name(BlockPolicy policy) {
  return policy == BlockPolicy::kError ? "error" : "drop";
}

BlockPolicy parse_block_policy(std::string_view name) {
  if (name == "error") return BlockPolicy::kError;
  if (name == "drop") return BlockPolicy::kDrop;
  throw LateError(ErrorCode::kInvalidConfig,
                  "unknown block policy '" + std::string(name) + "'");
}

std::map<std::string, std::vector<std::size_t>> group_rows(
    const std::vector<std::string>& labels) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  return groups;
}

namespace {

struct BlockRows {
  std::string label;
  std::vector<std::size_t> rows;
  std::size_t n1 = 0;
};

// Group-centered residuals of one block under shared covariate slopes.
IttFit block_fit(const Dataset& data, std::span<const double> response,
                 const BlockRows& block, double effect,
                 std::span<const double> slopes) {
  const std::size_t v = data.num_covariates();
  IttFit fit;
  fit.effect = effect;
  fit.covariate_coefs.assign(slopes.begin(), slopes.end());
  fit.n1 = block.n1;
  fit.n0 = block.rows.size() - block.n1;
  double ysum[2] = {0.0, 0.0};
  std::vector<double> xsum[2] = {std::vector<double>(v, 0.0),
                                 std::vector<double>(v, 0.0)};
  for (std::size_t r : block.rows) {
    const int arm = data.t[r];
    ysum[arm] += response[r];
    for (std::size_t c = 0; c < v; ++c) xsum[arm][c] += data.x(r, c);
  }
  const double count[2] = {static_cast<double>(fit.n0), static_cast<double>(fit.n1)};
  for (std::size_t r : block.rows) {
    const int arm = data.t[r];
    double e = response[r] - ysum[arm] / count[arm];
    for (std::size_t c = 0; c < v; ++c) {
      e -= (data.x(r, c) - xsum[arm][c] / count[arm]) * slopes[c];
    }
    (arm == 1 ? fit.residuals_treated : fit.residuals_control).push_back(e);
  }
  fit.intercept = (ysum[0] + ysum[1]) / static_cast<double>(block.rows.size());
  return fit;
}

void route_failure(BlockPolicy policy, const std::string& label, const LateError& error,
                   BlockEstimates& out) {
  if (policy == BlockPolicy::kError) {
    throw LateError(error.code(), "block '" + label + "': " + error.message());
  }
  out.dropped.push_back({label, std::string(error.what())});
  add_warning(out.warnings, kWarnDroppedBlock);
}

}  // namespace

BlockEstimates estimate_blocks(const Dataset& data, BlockPolicy policy) {
  if (!data.block_id) {
    throw LateError(ErrorCode::kInvalidConfig, "blocked design requires a block column");
  }
  data.validate();
  BlockEstimates out;

  std::vector<BlockRows> blocks;
  for (auto& [label, rows] : group_rows(*data.block_id)) {
    BlockRows block{label, rows, 0};
    for (std::size_t r : rows) block.n1 += static_cast<std::size_t>(data.t[r]);
    if (block.n1 == 0 || block.n1 == rows.size()) {
      route_failure(policy, label,
                    LateError(ErrorCode::kDegenerateArm, "an assignment arm is empty"),
                    out);
      continue;
    }
    blocks.push_back(std::move(block));
  }
  if (blocks.empty()) {
    throw LateError(ErrorCode::kAllBlocksDropped, "no block has both arms");
  }

  const std::size_t h = blocks.size();
  const std::size_t v = data.num_covariates();
  std::size_t units = 0;
  for (const BlockRows& b : blocks) units += b.rows.size();
  out.units_in_model = units;
  out.blocks_in_model = h;

  std::vector<double> tau_y(h), tau_d(h), beta, gamma;
  if (v == 0) {
    for (std::size_t b = 0; b < h; ++b) {
      double sums[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // [arm][y/d]
      for (std::size_t r : blocks[b].rows) {
        sums[data.t[r]][0] += data.y[r];
        sums[data.t[r]][1] += data.d[r];
      }
      const double n1 = static_cast<double>(blocks[b].n1);
      const double n0 = static_cast<double>(blocks[b].rows.size() - blocks[b].n1);
      tau_y[b] = sums[1][0] / n1 - sums[0][0] / n0;
      tau_d[b] = sums[1][1] / n1 - sums[0][1] / n0;
    }
  } else {
    Matrix design(units, 2 * h + v);
    std::vector<double> ys(units), ds(units);
    std::size_t row = 0;
    for (std::size_t b = 0; b < h; ++b) {
      const double nb = static_cast<double>(blocks[b].rows.size());
      const double pb = static_cast<double>(blocks[b].n1) / nb;
      std::vector<double> xbar(v, 0.0);
      for (std::size_t r : blocks[b].rows) {
        for (std::size_t c = 0; c < v; ++c) xbar[c] += data.x(r, c);
      }
      for (double& m : xbar) m /= nb;
      for (std::size_t r : blocks[b].rows) {
        design(row, b) = 1.0;
        design(row, h + b) = static_cast<double>(data.t[r]) - pb;
        for (std::size_t c = 0; c < v; ++c) design(row, 2 * h + c) = data.x(r, c) - xbar[c];
        ys[row] = data.y[r];
        ds[row] = data.d[r];
        ++row;
      }
    }
    const std::vector<double> coef_y = solve_least_squares(design, ys);
    const std::vector<double> coef_d = solve_least_squares(design, ds);
    for (std::size_t b = 0; b < h; ++b) {
      tau_y[b] = coef_y[h + b];
      tau_d[b] = coef_d[h + b];
    }
    beta.assign(coef_y.begin() + 2 * h, coef_y.end());
    gamma.assign(coef_d.begin() + 2 * h, coef_d.end());
  }

  for (std::size_t b = 0; b < h; ++b) {
    const BlockRows& block = blocks[b];
    try {
      PointEstimate est =
          late_from_fits(block_fit(data, data.y, block, tau_y[b], beta),
                         block_fit(data, data.d, block, tau_d[b], gamma));
      const double nb = static_cast<double>(block.rows.size());
      const double qb = nb / static_cast<double>(units);
      const double pb = static_cast<double>(block.n1) / nb;
      const double vq = static_cast<double>(v) * qb;
      const DbVariance db =
          variance_db_with_df(est.fit_y, est.fit_d, est.tau_late, vq * pb, vq * (1.0 - pb));
      BlockResult result;
      result.label = block.label;
      result.n = block.rows.size();
      result.n1 = block.n1;
      result.n0 = block.rows.size() - block.n1;
      result.tau_itt = est.tau_itt;
      result.pi_itt = est.pi_itt;
      result.tau_late = est.tau_late;
      result.var_qbar = db.variance;
      result.var_bounded = variance_db_bounded(db, block.rows.size()).variance;
      result.components = db.components;
      for (const std::string& w : est.warnings) add_warning(out.warnings, w);
      out.blocks.push_back(std::move(result));
    } catch (const LateError& error) {
      route_failure(policy, block.label, error, out);
    }
  }
  if (out.blocks.empty()) {
    throw LateError(ErrorCode::kAllBlocksDropped, "every block was dropped");
  }
  return out;
}

PooledResult pool(std::vector<BlockResult> blocks, BlockWeightScheme scheme,
                  double df_units, std::size_t num_covariates, std::size_t h) {
  if (blocks.empty()) {
    throw LateError(ErrorCode::kAllBlocksDropped, "no blocks to pool");
  }
  PooledResult out;
  out.scheme = scheme;
  double weight_sum = 0.0;
  double size_sum = 0.0;
  for (BlockResult& b : blocks) {
    switch (scheme) {
      case BlockWeightScheme::kComplierSize:
        b.weight = static_cast<double>(b.n) * b.pi_itt;
        if (b.weight < 0.0) {
          b.weight = 0.0;
          add_warning(out.warnings, kWarnNegativeWeight);
        }
        break;
      case BlockWeightScheme::kBlockSize:
        b.weight = static_cast<double>(b.n);
        break;
      case BlockWeightScheme::kUniform:
        b.weight = 1.0;
        break;
    }
    weight_sum += b.weight;
    size_sum += static_cast<double>(b.n);
  }
  if (!(weight_sum > 0.0)) {
    throw LateError(ErrorCode::kZeroComplianceEffect, "block weights sum to zero");
  }
  for (const BlockResult& b : blocks) {
    const double share = b.weight / weight_sum;
    out.tau_late += share * b.tau_late;
    out.var_pooled += share * share * b.var_qbar;
    out.var_pooled_bounded += share * share * b.var_bounded;
    const double size_share = static_cast<double>(b.n) / size_sum;
    out.tau_itt += size_share * b.tau_itt;
    out.pi_itt += size_share * b.pi_itt;
  }
  out.df = df_units - static_cast<double>(num_covariates) - 2.0 * static_cast<double>(h);
  out.num_covariates = num_covariates;
  out.per_block = std::move(blocks);
  return out;
}

void attach_pooled_inference(PooledResult& result, const EstimateOptions& options) {
  const double critical = critical_value(options.alpha, result.df, options.reference);
  for (VarianceMethod method : options.methods) {
    double variance = 0.0;
    switch (method) {
      case VarianceMethod::kDb:
        variance = result.var_pooled;
        break;
      case VarianceMethod::kDbBounded:
        variance = result.var_pooled_bounded;
        break;
      case VarianceMethod::kIv:
        add_warning(result.warnings, kWarnIvUnavailable);
        continue;
    }
    MethodEstimate m;
    m.variance = variance;
    m.se = std::sqrt(variance);
    m.inference = infer_with_critical(result.tau_late, variance, critical, result.df,
                                      options.reference);
    result.methods[method] = m;
  }
}

PooledResult analyze_blocked(const Dataset& data, const BlockedOptions& options) {
  BlockEstimates estimates = estimate_blocks(data, options.policy);
  PooledResult result =
      pool(std::move(estimates.blocks), options.scheme,
           static_cast<double>(estimates.units_in_model), data.num_covariates(),
           estimates.blocks_in_model);
  for (const std::string& w : estimates.warnings) add_warning(result.warnings, w);
  result.dropped = std::move(estimates.dropped);
  result.n = data.n();
  result.first_stage_f = first_stage_f(data.d, data.t);
  if (result.first_stage_f < kWeakInstrumentF) {
    add_warning(result.warnings, kWarnWeakInstrument);
  }
  attach_pooled_inference(result, options.estimate);
  return result;
}

}  // namespace late
