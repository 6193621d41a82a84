#include "late/estimator.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "late/error.h"

namespace late {

std::size_t Dataset::treated_count() const {
  return static_cast<std::size_t>(std::count(t.begin(), t.end(), 1));
}

void Dataset::validate() const {
  const std::size_t rows = n();
  if (d.size() != rows || t.size() != rows || x.rows() != rows) {
    throw LateError(ErrorCode::kDomainError, "column lengths differ");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::isfinite(y[i])) {
      throw LateError(ErrorCode::kNonFiniteValue, "outcome at row " + std::to_string(i + 1));
    }
    if (d[i] != 0.0 && d[i] != 1.0) {
      throw LateError(ErrorCode::kNonBinaryValue, "receipt at row " + std::to_string(i + 1));
    }
    if (t[i] != 0 && t[i] != 1) {
      throw LateError(ErrorCode::kNonBinaryValue,
                      "assignment at row " + std::to_string(i + 1));
    }
    for (double v : x.row(i)) {
      if (!std::isfinite(v)) {
        throw LateError(ErrorCode::kNonFiniteValue,
                        "covariate at row " + std::to_string(i + 1));
      }
    }
  }
  if (block_id && block_id->size() != rows) {
    throw LateError(ErrorCode::kDomainError, "block column length differs");
  }
  if (cluster_id && cluster_id->size() != rows) {
    throw LateError(ErrorCode::kDomainError, "cluster column length differs");
  }
  if (weight) {
    if (weight->size() != rows) {
      throw LateError(ErrorCode::kDomainError, "weight column length differs");
    }
    for (std::size_t i = 0; i < rows; ++i) {
      if (!((*weight)[i] > 0.0) || !std::isfinite((*weight)[i])) {
        throw LateError(ErrorCode::kDomainError,
                        "weight must be positive at row " + std::to_string(i + 1));
      }
    }
  }
  const std::size_t n1 = treated_count();
  if (n1 == 0 || n1 == rows) {
    throw LateError(ErrorCode::kEmptyArm, "both arms must be nonempty");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.y.reserve(rows.size());
  out.d.reserve(rows.size());
  out.t.reserve(rows.size());
  for (std::size_t r : rows) {
    out.y.push_back(y[r]);
    out.d.push_back(d[r]);
    out.t.push_back(t[r]);
  }
  out.x = x.select_rows(rows);
  auto pick = [&](const auto& column) {
    std::remove_cvref_t<decltype(column)> picked;
    picked.reserve(rows.size());
    for (std::size_t r : rows) picked.push_back(column[r]);
    return picked;
  };
  if (block_id) out.block_id = pick(*block_id);
  if (cluster_id) out.cluster_id = pick(*cluster_id);
  if (weight) out.weight = pick(*weight);
  return out;
}

std::string_view method_name(VarianceMethod method) {
  switch (method) {
    case VarianceMethod::kDb: return "db";
    case VarianceMethod::kDbBounded: return "db_bounded";
    case VarianceMethod::kIv: return "iv";
  }
  return "unknown";
}

VarianceMethod parse_method(std::string_view name) {
  if (name == "db") return VarianceMethod::kDb;
  if (name == "db_bounded") return VarianceMethod::kDbBounded;
  if (name == "iv") return VarianceMethod::kIv;
  throw LateError(ErrorCode::kInvalidConfig,
                  "unknown variance method '" + std::string(name) + "'");
}

std::string_view reference_name(Reference reference) {
  return reference == Reference::kT ? "t" : "z";
}

void add_warning(std::vector<std::string>& warnings, std::string_view label) {
  if (std::find(warnings.begin(), warnings.end(), label) == warnings.end()) {
    warnings.emplace_back(label);
  }
}

namespace {

void check_assignment(std::span<const double> response, std::span<const int> t,
                      const Matrix& x, std::size_t& n1, std::size_t& n0) {
  if (response.size() != t.size() || x.rows() != t.size()) {
    throw LateError(ErrorCode::kDomainError, "fit inputs have different lengths");
  }
  n1 = 0;
  for (int v : t) {
    if (v != 0 && v != 1) throw LateError(ErrorCode::kNonBinaryValue, "assignment");
    n1 += static_cast<std::size_t>(v);
  }
  n0 = t.size() - n1;
  if (n1 == 0 || n0 == 0) {
    throw LateError(ErrorCode::kDegenerateArm, "an assignment arm is empty");
  }
}

// Shared tail of the weighted and unweighted fits. weights empty = unit
// weights. Computes arm means, the regression, and group-centered residuals.
IttFit fit_impl(std::span<const double> response, std::span<const int> t,
                const Matrix& x, std::span<const double> weights) {
  IttFit fit;
  check_assignment(response, t, x, fit.n1, fit.n0);
  const std::size_t n = t.size();
  const std::size_t v = x.cols();
  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  double wsum[2] = {0.0, 0.0};
  double ysum[2] = {0.0, 0.0};
  std::vector<double> xsum[2] = {std::vector<double>(v, 0.0),
                                 std::vector<double>(v, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const int arm = t[i];
    wsum[arm] += w(i);
    ysum[arm] += w(i) * response[i];
    const auto row = x.row(i);
    for (std::size_t c = 0; c < v; ++c) xsum[arm][c] += w(i) * row[c];
  }
  const double total_w = wsum[0] + wsum[1];
  double ymean[2];
  std::vector<double> xmean[2];
  std::vector<double> xgrand(v);
  for (int arm = 0; arm < 2; ++arm) {
    ymean[arm] = ysum[arm] / wsum[arm];
    xmean[arm].resize(v);
    for (std::size_t c = 0; c < v; ++c) xmean[arm][c] = xsum[arm][c] / wsum[arm];
  }
  for (std::size_t c = 0; c < v; ++c) xgrand[c] = (xsum[0][c] + xsum[1][c]) / total_w;

  if (v == 0) {
    fit.effect = ymean[1] - ymean[0];
    fit.intercept = (ysum[0] + ysum[1]) / total_w;
  } else {
    const double share = wsum[1] / total_w;
    Matrix design(n, 2 + v);
    for (std::size_t i = 0; i < n; ++i) {
      design(i, 0) = 1.0;
      design(i, 1) = static_cast<double>(t[i]) - share;
      const auto row = x.row(i);
      for (std::size_t c = 0; c < v; ++c) design(i, 2 + c) = row[c] - xgrand[c];
    }
    const std::vector<double> coef =
        weights.empty() ? solve_least_squares(design, response)
                        : solve_weighted_least_squares(design, response, weights);
    fit.intercept = coef[0];
    fit.effect = coef[1];
    fit.covariate_coefs.assign(coef.begin() + 2, coef.end());
  }

  fit.residuals_treated.reserve(fit.n1);
  fit.residuals_control.reserve(fit.n0);
  const double wbar[2] = {wsum[0] / static_cast<double>(fit.n0),
                          wsum[1] / static_cast<double>(fit.n1)};
  for (std::size_t i = 0; i < n; ++i) {
    const int arm = t[i];
    double r = response[i] - ymean[arm];
    const auto row = x.row(i);
    for (std::size_t c = 0; c < v; ++c) {
      r -= (row[c] - xmean[arm][c]) * fit.covariate_coefs[c];
    }
    (arm == 1 ? fit.residuals_treated : fit.residuals_control).push_back(r);
    if (!weights.empty()) {
      (arm == 1 ? fit.scale_treated : fit.scale_control).push_back(w(i) / wbar[arm]);
    }
  }
  return fit;
}

struct ArmSums {
  double yy = 0.0;
  double dd = 0.0;
  double yd = 0.0;
  double rss = 0.0;
};

ArmSums arm_sums(std::span<const double> ey, std::span<const double> ed,
                 std::span<const double> scale, double tau) {
  ArmSums s;
  for (std::size_t i = 0; i < ey.size(); ++i) {
    const double f2 = scale.empty() ? 1.0 : scale[i] * scale[i];
    const double r = ey[i] - tau * ed[i];
    s.yy += f2 * ey[i] * ey[i];
    s.dd += f2 * ed[i] * ed[i];
    s.yd += f2 * ey[i] * ed[i];
    s.rss += f2 * r * r;
  }
  return s;
}

ArmComponents components_for(const ArmSums& s, double tau, double pi, double den) {
  const double scale = 1.0 / (pi * pi * den);
  ArmComponents c;
  c.s2_ry = s.yy * scale;
  c.s2_rd = tau * tau * s.dd * scale;
  c.s2_ryd = -2.0 * tau * s.yd * scale;
  c.s2_r = s.rss * scale;
  return c;
}

}  // namespace

IttFit fit_itt(std::span<const double> response, std::span<const int> t,
               const Matrix& x) {
  return fit_impl(response, t, x, {});
}

IttFit fit_itt_weighted(std::span<const double> response, std::span<const int> t,
                        const Matrix& x, std::span<const double> weights) {
  if (weights.size() != t.size()) {
    throw LateError(ErrorCode::kDomainError, "weight length mismatch");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw LateError(ErrorCode::kDomainError, "weights must be positive");
    }
  }
  return fit_impl(response, t, x, weights);
}

PointEstimate late_from_fits(IttFit fit_y, IttFit fit_d) {
  PointEstimate est;
  est.tau_itt = fit_y.effect;
  est.pi_itt = fit_d.effect;
  if (!(std::fabs(est.pi_itt) > kComplianceThreshold)) {
    throw LateError(ErrorCode::kZeroComplianceEffect,
                    "estimated ITT effect on receipt is zero");
  }
  if (est.pi_itt < 0.0) add_warning(est.warnings, kWarnNegativeCompliance);
  est.tau_late = est.tau_itt / est.pi_itt;
  est.fit_y = std::move(fit_y);
  est.fit_d = std::move(fit_d);
  return est;
}

PointEstimate estimate_late(const Dataset& data) {
  return late_from_fits(fit_itt(data.y, data.t, data.x),
                        fit_itt(data.d, data.t, data.x));
}

DbVariance variance_db_with_df(const IttFit& fit_y, const IttFit& fit_d,
                               double tau_late, double k1, double k0) {
  const double den1 = static_cast<double>(fit_y.n1) - k1 - 1.0;
  const double den0 = static_cast<double>(fit_y.n0) - k0 - 1.0;
  if (!(den1 > 0.0) || !(den0 > 0.0)) {
    throw LateError(ErrorCode::kInsufficientDf,
                    "arm residual degrees of freedom must be positive");
  }
  const double pi = fit_d.effect;
  DbVariance out;
  out.components.treated = components_for(
      arm_sums(fit_y.residuals_treated, fit_d.residuals_treated, fit_y.scale_treated,
               tau_late),
      tau_late, pi, den1);
  out.components.control = components_for(
      arm_sums(fit_y.residuals_control, fit_d.residuals_control, fit_y.scale_control,
               tau_late),
      tau_late, pi, den0);
  out.variance = out.components.treated.s2_r / static_cast<double>(fit_y.n1) +
                 out.components.control.s2_r / static_cast<double>(fit_y.n0);
  return out;
}

DbVariance variance_db(const IttFit& fit_y, const IttFit& fit_d, double tau_late,
                       std::size_t num_covariates) {
  const double p = static_cast<double>(fit_y.n1) /
                   static_cast<double>(fit_y.n1 + fit_y.n0);
  const double v = static_cast<double>(num_covariates);
  return variance_db_with_df(fit_y, fit_d, tau_late, v * p, v * (1.0 - p));
}

BoundedVariance variance_db_bounded(const DbVariance& db, std::size_t n) {
  const double gap = std::sqrt(std::max(db.components.treated.s2_r, 0.0)) -
                     std::sqrt(std::max(db.components.control.s2_r, 0.0));
  BoundedVariance out;
  out.variance = db.variance - gap * gap / static_cast<double>(n);
  if (out.variance < 0.0) {
    out.variance = 0.0;
    out.floored = true;
  }
  return out;
}

double variance_iv(const IttFit& fit_y, const IttFit& fit_d, double tau_late,
                   std::size_t num_covariates) {
  const double n = static_cast<double>(fit_y.n1 + fit_y.n0);
  const double den = n - static_cast<double>(num_covariates) - 2.0;
  if (!(den > 0.0)) {
    throw LateError(ErrorCode::kInsufficientDf, "n - V - 2 must be positive");
  }
  const double rss =
      arm_sums(fit_y.residuals_treated, fit_d.residuals_treated, {}, tau_late).rss +
      arm_sums(fit_y.residuals_control, fit_d.residuals_control, {}, tau_late).rss;
  const double pi = fit_d.effect;
  const double s2 = rss / (pi * pi * den);
  return s2 * (1.0 / static_cast<double>(fit_y.n1) + 1.0 / static_cast<double>(fit_y.n0));
}

double first_stage_f(std::span<const double> d, std::span<const int> t) {
  if (d.size() != t.size()) {
    throw LateError(ErrorCode::kDomainError, "first stage inputs differ in length");
  }
  const std::size_t n = d.size();
  if (n < 3) throw LateError(ErrorCode::kDomainError, "first stage needs n >= 3");
  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    if (t[i] != 0 && t[i] != 1) throw LateError(ErrorCode::kNonBinaryValue, "assignment");
    sum[t[i]] += d[i];
    ++count[t[i]];
  }
  if (count[0] == 0 || count[1] == 0) {
    throw LateError(ErrorCode::kDegenerateArm, "an assignment arm is empty");
  }
  const double mean[2] = {sum[0] / static_cast<double>(count[0]),
                          sum[1] / static_cast<double>(count[1])};
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = d[i] - mean[t[i]];
    rss += e * e;
  }
  const double diff = mean[1] - mean[0];
  const double mss = static_cast<double>(count[0]) * static_cast<double>(count[1]) /
                     static_cast<double>(n) * diff * diff;
  if (mss == 0.0) return 0.0;
  if (rss == 0.0) return std::numeric_limits<double>::infinity();
  return mss / (rss / static_cast<double>(n - 2));
}

double critical_value(double alpha, double df, Reference reference) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw LateError(ErrorCode::kDomainError, "alpha must lie in (0, 1)");
  }
  if (reference == Reference::kZ) return normal_quantile(1.0 - 0.5 * alpha);
  if (!(df > 0.0)) {
    throw LateError(ErrorCode::kInsufficientDf, "t reference requires df > 0");
  }
  return student_t_quantile(1.0 - 0.5 * alpha, df);
}

Inference infer_with_critical(double tau_late, double variance, double critical,
                              double df, Reference reference) {
  if (!(variance >= 0.0)) {
    throw LateError(ErrorCode::kDomainError, "variance must be nonnegative");
  }
  const double se = std::sqrt(variance);
  Inference out;
  if (se == 0.0) {
    out.t_stat = tau_late == 0.0 ? 0.0
                                 : std::copysign(std::numeric_limits<double>::infinity(),
                                                 tau_late);
  } else {
    out.t_stat = tau_late / se;
  }
  const double abs_t = std::fabs(out.t_stat);
  out.p_value = reference == Reference::kZ ? 2.0 * normal_cdf(-abs_t)
                                           : 2.0 * student_t_cdf(-abs_t, df);
  out.p_value = std::min(out.p_value, 1.0);
  out.ci_lower = tau_late - critical * se;
  out.ci_upper = tau_late + critical * se;
  return out;
}

Inference infer(double tau_late, double variance, double df, double alpha,
                Reference reference) {
  return infer_with_critical(tau_late, variance, critical_value(alpha, df, reference),
                             df, reference);
}

LateResult analyze_simple(const Dataset& data, const EstimateOptions& options) {
  data.validate();
  const std::size_t v = data.num_covariates();
  PointEstimate est = estimate_late(data);

  LateResult result;
  result.n = data.n();
  result.n1 = est.fit_y.n1;
  result.n0 = est.fit_y.n0;
  result.num_covariates = v;
  result.tau_itt = est.tau_itt;
  result.pi_itt = est.pi_itt;
  result.tau_late = est.tau_late;
  result.warnings = est.warnings;
  result.first_stage_f = first_stage_f(data.d, data.t);
  if (result.first_stage_f < kWeakInstrumentF) {
    add_warning(result.warnings, kWarnWeakInstrument);
  }
  result.df = static_cast<double>(data.n()) - static_cast<double>(v) - 2.0;

  const DbVariance db = variance_db(est.fit_y, est.fit_d, est.tau_late, v);
  result.components = db.components;
  const double critical = critical_value(options.alpha, result.df, options.reference);
  auto record = [&](VarianceMethod method, double variance) {
    MethodEstimate m;
    m.variance = variance;
    m.se = std::sqrt(variance);
    m.inference = infer_with_critical(result.tau_late, variance, critical, result.df,
                                      options.reference);
    result.methods[method] = m;
  };
  for (VarianceMethod method : options.methods) {
    switch (method) {
      case VarianceMethod::kDb:
        record(method, db.variance);
        break;
      case VarianceMethod::kDbBounded: {
        const BoundedVariance bounded = variance_db_bounded(db, data.n());
        if (bounded.floored) add_warning(result.warnings, kWarnFlooredVariance);
        record(method, bounded.variance);
        break;
      }
      case VarianceMethod::kIv:
        record(method, variance_iv(est.fit_y, est.fit_d, est.tau_late, v));
        break;
    }
  }
  return result;
}

}  // namespace late
