#ifndef LATE_CLUSTERED_H_
#define LATE_CLUSTERED_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "late/blocked.h"
#include "late/estimator.h"

namespace late {

enum class ClusterWeightScheme { kSize, kUniform, kColumn };

std::string_view cluster_weight_scheme_name(ClusterWeightScheme scheme);
ClusterWeightScheme parse_cluster_weight_scheme(std::string_view name);

// One row per cluster, clusters in lexicographic label order.
struct ClusterDataset {
  std::vector<std::string> labels;
  std::vector<int> t;
  std::vector<double> w;
  std::vector<double> ybar;
  std::vector<double> dbar;
  Matrix xbar;  // m x V
  std::vector<std::size_t> size;

  std::size_t m() const { return t.size(); }
  std::size_t units() const;
};

// Unweighted within-cluster means; w_j from the scheme. kColumn reads the
// dataset weight column, which must be constant inside each cluster.
ClusterDataset aggregate(const Dataset& data, ClusterWeightScheme scheme);

// Weighted arm means and WLS covariate slopes on the cluster aggregates.
PointEstimate estimate_late_clustered(const ClusterDataset& cd);

// Plug-in variance over clusters with residuals scaled by w_j / wbar^t and
// df adjustments V*p, V*(1-p) for p = m1/m.
DbVariance variance_clustered(const PointEstimate& est, std::size_t num_covariates);

struct ClusteredOptions {
  EstimateOptions estimate;
  ClusterWeightScheme cluster_weights = ClusterWeightScheme::kSize;
  BlockPolicy policy = BlockPolicy::kError;
  BlockWeightScheme scheme = BlockWeightScheme::kComplierSize;
};

// df = m - V - 2. The first-stage F is computed on cluster means.
LateResult analyze_clustered(const Dataset& data, const ClusteredOptions& options = {});

// Per-block clustered estimates pooled across blocks; df = m - V - 2h.
PooledResult analyze_blocked_clustered(const Dataset& data,
                                       const ClusteredOptions& options = {});

}  // namespace late

#endif  // LATE_CLUSTERED_H_
