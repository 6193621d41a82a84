#ifndef LATE_BLOCKED_H_
#define LATE_BLOCKED_H_

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "late/estimator.h"

namespace late {

enum class BlockWeightScheme { kComplierSize, kBlockSize, kUniform };
enum class BlockPolicy { kError, kDrop };

std::string_view block_weight_scheme_name(BlockWeightScheme scheme);
BlockWeightScheme parse_block_weight_scheme(std::string_view name);
std::string_view block_policy_name(BlockPolicy policy);
BlockPolicy parse_block_policy(std::string_view name);

inline constexpr std::string_view kWarnNegativeWeight = "NegativeWeight";
inline constexpr std::string_view kWarnDroppedBlock = "DroppedBlock";

struct BlockResult {
  std::string label;
  std::size_t n = 0;   // units in the block
  std::size_t m = 0;   // clusters in the block (clustered designs only)
  std::size_t n1 = 0;  // arm sizes in estimation units
  std::size_t n0 = 0;
  double tau_itt = 0.0;
  double pi_itt = 0.0;
  double tau_late = 0.0;
  double var_qbar = 0.0;
  double var_bounded = 0.0;
  VarianceComponents components;
  double weight = 0.0;  // set by pool()
};

struct DroppedBlock {
  std::string label;
  std::string reason;
};

struct BlockEstimates {
  std::vector<BlockResult> blocks;
  std::vector<DroppedBlock> dropped;
  std::vector<std::string> warnings;
  std::size_t units_in_model = 0;
  std::size_t blocks_in_model = 0;
};

// Fits the blocked ITT model (block intercepts, block-specific centered
// treatment effects, shared coefficients on block-centered covariates) for
// outcome and receipt, then per block computes the LATE ratio and the
// plug-in variance with df adjustments V*q_b*p_b and V*q_b*(1-p_b).
// Degenerate blocks (one arm empty, zero compliance effect, insufficient df)
// throw under BlockPolicy::kError and are listed in `dropped` under kDrop.
BlockEstimates estimate_blocks(const Dataset& data,
                               BlockPolicy policy = BlockPolicy::kError);

struct PooledResult {
  double tau_late = 0.0;
  double var_pooled = 0.0;
  double var_pooled_bounded = 0.0;
  double df = 0.0;
  // Block-size weighted ITT effects, reported alongside the pooled LATE.
  double tau_itt = 0.0;
  double pi_itt = 0.0;
  BlockWeightScheme scheme = BlockWeightScheme::kComplierSize;
  std::vector<BlockResult> per_block;
  std::vector<DroppedBlock> dropped;
  std::vector<std::string> warnings;
  // Filled by the analyze_* drivers.
  std::map<VarianceMethod, MethodEstimate> methods;
  double first_stage_f = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t num_covariates = 0;
};

// Weighted pooling of per-block estimates. df = df_units - V - 2h, where
// df_units is n for unit designs and m for clustered designs.
PooledResult pool(std::vector<BlockResult> blocks, BlockWeightScheme scheme,
                  double df_units, std::size_t num_covariates, std::size_t h);

struct BlockedOptions {
  EstimateOptions estimate;
  BlockPolicy policy = BlockPolicy::kError;
  BlockWeightScheme scheme = BlockWeightScheme::kComplierSize;
};

// Attaches inference for the db and db_bounded methods to a pooled result;
// iv is not defined for pooled designs and yields a warning.
void attach_pooled_inference(PooledResult& result, const EstimateOptions& options);

PooledResult analyze_blocked(const Dataset& data, const BlockedOptions& options = {});

// Row indices per block label, labels in lexicographic order.
std::map<std::string, std::vector<std::size_t>> group_rows(
    const std::vector<std::string>& labels);

inline constexpr std::string_view kWarnIvUnavailable = "IvUnavailableForDesign";

}  // namespace late

#endif  // LATE_BLOCKED_H_
