#ifndef LATE_ESTIMATOR_H_
#define LATE_ESTIMATOR_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "late/numerics.h"

namespace late {

// Observed trial data. d and t hold 0/1 values; x is n x V (V may be 0).
struct Dataset {
  std::vector<double> y;
  std::vector<double> d;
  std::vector<int> t;
  Matrix x;
  std::optional<std::vector<std::string>> block_id;
  std::optional<std::vector<std::string>> cluster_id;
  std::optional<std::vector<double>> weight;

  std::size_t n() const { return y.size(); }
  std::size_t num_covariates() const { return x.cols(); }
  std::size_t treated_count() const;

  // Throws on binary/finite/length violations and on an empty arm.
  void validate() const;

  // Rows selected by index, optional columns carried along.
  Dataset subset(std::span<const std::size_t> rows) const;
};

enum class VarianceMethod { kDb, kDbBounded, kIv };
enum class Reference { kT, kZ };

std::string_view method_name(VarianceMethod method);
VarianceMethod parse_method(std::string_view name);
std::string_view reference_name(Reference reference);

// Warning labels attached to results.
inline constexpr std::string_view kWarnWeakInstrument = "WeakInstrument";
inline constexpr std::string_view kWarnNegativeCompliance = "NegativeCompliance";
inline constexpr std::string_view kWarnFlooredVariance = "FlooredVariance";

// Minimum |pi_itt| below which the LATE ratio is undefined.
inline constexpr double kComplianceThreshold = 1e-12;
// Stock-Yogo style screen on the first-stage F statistic.
inline constexpr double kWeakInstrumentF = 16.0;

// ITT regression of a response on (1, T - n1/n, x - xbar).
struct IttFit {
  double effect = 0.0;
  double intercept = 0.0;
  std::vector<double> covariate_coefs;
  // Group-centered residuals (y - ybar^t) - (x - xbar^t) * coefs, in the
  // original row order within each arm.
  std::vector<double> residuals_treated;
  std::vector<double> residuals_control;
  // Optional per-unit scale factors w_j / wbar^t for weighted (cluster) fits;
  // empty means all ones.
  std::vector<double> scale_treated;
  std::vector<double> scale_control;
  std::size_t n1 = 0;
  std::size_t n0 = 0;
};

IttFit fit_itt(std::span<const double> response, std::span<const int> t,
               const Matrix& x);

// Weighted ITT fit: weighted arm means and weighted least squares with
// covariates centered at the overall weighted mean.
IttFit fit_itt_weighted(std::span<const double> response, std::span<const int> t,
                        const Matrix& x, std::span<const double> weights);

struct PointEstimate {
  IttFit fit_y;
  IttFit fit_d;
  double tau_itt = 0.0;
  double pi_itt = 0.0;
  double tau_late = 0.0;
  std::vector<std::string> warnings;
};

// Ratio of the covariate-adjusted ITT effects on outcome and receipt.
PointEstimate estimate_late(const Dataset& data);

// Builds the point estimate from two already-computed fits.
PointEstimate late_from_fits(IttFit fit_y, IttFit fit_d);

struct ArmComponents {
  double s2_ry = 0.0;
  double s2_rd = 0.0;
  double s2_ryd = 0.0;
  double s2_r = 0.0;
};

struct VarianceComponents {
  ArmComponents treated;
  ArmComponents control;
};

struct DbVariance {
  double variance = 0.0;
  VarianceComponents components;
};

// Plug-in design-based variance s2_R(1)/n1 + s2_R(0)/n0 with the covariate
// df loss split V*p and V*(1-p) across arms.
DbVariance variance_db(const IttFit& fit_y, const IttFit& fit_d, double tau_late,
                       std::size_t num_covariates);

// Same estimator with explicit per-arm covariate df adjustments k1, k0.
DbVariance variance_db_with_df(const IttFit& fit_y, const IttFit& fit_d,
                               double tau_late, double k1, double k0);

struct BoundedVariance {
  double variance = 0.0;
  bool floored = false;
};

// Subtracts (1/n)(s_R(1) - s_R(0))^2, floored at zero.
BoundedVariance variance_db_bounded(const DbVariance& db, std::size_t n);

// Constant-effect IV variance with pooled residual variance and df n - V - 2.
double variance_iv(const IttFit& fit_y, const IttFit& fit_d, double tau_late,
                   std::size_t num_covariates);

// F statistic from the no-covariate regression of d on (1, T); +inf when the
// residual sum of squares is zero and the model sum of squares is not.
double first_stage_f(std::span<const double> d, std::span<const int> t);

struct Inference {
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
};

double critical_value(double alpha, double df, Reference reference);

Inference infer(double tau_late, double variance, double df, double alpha,
                Reference reference);

// infer() with a precomputed critical value.
Inference infer_with_critical(double tau_late, double variance, double critical,
                              double df, Reference reference);

struct MethodEstimate {
  double variance = 0.0;
  double se = 0.0;
  Inference inference;
};

struct LateResult {
  std::size_t n = 0;
  std::size_t m = 0;  // clusters; 0 outside clustered designs
  // Arm sizes in estimation units (clusters for clustered designs).
  std::size_t n1 = 0;
  std::size_t n0 = 0;
  std::size_t num_covariates = 0;
  double tau_itt = 0.0;
  double pi_itt = 0.0;
  double tau_late = 0.0;
  std::map<VarianceMethod, MethodEstimate> methods;
  VarianceComponents components;
  double df = 0.0;
  double first_stage_f = 0.0;
  std::vector<std::string> warnings;
};

struct EstimateOptions {
  std::vector<VarianceMethod> methods = {VarianceMethod::kDb,
                                         VarianceMethod::kDbBounded,
                                         VarianceMethod::kIv};
  Reference reference = Reference::kT;
  double alpha = 0.05;
};

// Full simple-design analysis: point estimates, requested variances,
// inference with df = n - V - 2, first-stage diagnostics.
LateResult analyze_simple(const Dataset& data, const EstimateOptions& options = {});

void add_warning(std::vector<std::string>& warnings, std::string_view label);

}  // namespace late

#endif  // LATE_ESTIMATOR_H_
