#include "late/numerics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "late/error.h"

namespace late {

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(data_.begin() + indices[i] * cols_, cols_,
                out.data_.begin() + i * cols_);
  }
  return out;
}

namespace {

// Lower-triangular Cholesky factor of a k x k SPD matrix (row-major), with
// the rank check applied to the squared diagonal pivots.
std::vector<double> cholesky(std::vector<double> a, std::size_t k) {
  double max_pivot = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double diag = a[j * k + j];
    for (std::size_t p = 0; p < j; ++p) diag -= a[j * k + p] * a[j * k + p];
    max_pivot = std::max(max_pivot, diag);
    if (!(diag > kRankTolerance * max_pivot) || !(diag > 0.0)) {
      throw LateError(ErrorCode::kRankDeficient,
                      "normal equations are singular at column " +
                          std::to_string(j) + " (collinear regressors)");
    }
    const double l = std::sqrt(diag);
    a[j * k + j] = l;
    for (std::size_t i = j + 1; i < k; ++i) {
      double v = a[i * k + j];
      for (std::size_t p = 0; p < j; ++p) v -= a[i * k + p] * a[j * k + p];
      a[i * k + j] = v / l;
    }
  }
  return a;
}

void cholesky_solve(const std::vector<double>& l, std::size_t k,
                    std::vector<double>& rhs) {
  for (std::size_t i = 0; i < k; ++i) {
    double v = rhs[i];
    for (std::size_t p = 0; p < i; ++p) v -= l[i * k + p] * rhs[p];
    rhs[i] = v / l[i * k + i];
  }
  for (std::size_t i = k; i-- > 0;) {
    double v = rhs[i];
    for (std::size_t p = i + 1; p < k; ++p) v -= l[p * k + i] * rhs[p];
    rhs[i] = v / l[i * k + i];
  }
}

std::vector<double> solve_impl(const Matrix& design,
                               std::span<const double> response,
                               std::span<const double> weights) {
  const std::size_t n = design.rows();
  const std::size_t k = design.cols();
  if (k == 0 || n < k) {
    throw LateError(ErrorCode::kDomainError,
                    "design must satisfy n >= k >= 1 (n=" + std::to_string(n) +
                        ", k=" + std::to_string(k) + ")");
  }
  if (response.size() != n || (!weights.empty() && weights.size() != n)) {
    throw LateError(ErrorCode::kDomainError, "response/weight length mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(response[i])) {
      throw LateError(ErrorCode::kDomainError, "non-finite response");
    }
    if (!weights.empty() && !(weights[i] > 0.0 && std::isfinite(weights[i]))) {
      throw LateError(ErrorCode::kDomainError, "weights must be positive");
    }
    for (double v : design.row(i)) {
      if (!std::isfinite(v)) {
        throw LateError(ErrorCode::kDomainError, "non-finite design entry");
      }
    }
  }

  auto weight = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  std::vector<double> gram(k * k, 0.0);
  std::vector<double> rhs(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = design.row(i);
    const double w = weight(i);
    for (std::size_t a = 0; a < k; ++a) {
      const double wa = w * row[a];
      rhs[a] += wa * response[i];
      for (std::size_t b = 0; b <= a; ++b) gram[a * k + b] += wa * row[b];
    }
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) gram[a * k + b] = gram[b * k + a];
  }

  // Jacobi equilibration so the pivot test is scale free.
  std::vector<double> scale(k);
  for (std::size_t a = 0; a < k; ++a) {
    if (!(gram[a * k + a] > 0.0)) {
      throw LateError(ErrorCode::kRankDeficient,
                      "design column " + std::to_string(a) + " is identically zero");
    }
    scale[a] = 1.0 / std::sqrt(gram[a * k + a]);
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) gram[a * k + b] *= scale[a] * scale[b];
  }
  const std::vector<double> chol = cholesky(gram, k);

  std::vector<double> z(k);
  for (std::size_t a = 0; a < k; ++a) z[a] = rhs[a] * scale[a];
  cholesky_solve(chol, k, z);
  std::vector<double> coef(k);
  for (std::size_t a = 0; a < k; ++a) coef[a] = z[a] * scale[a];

  // One step of iterative refinement on the residual.
  std::vector<double> correction(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = design.row(i);
    double fitted = 0.0;
    for (std::size_t a = 0; a < k; ++a) fitted += row[a] * coef[a];
    const double r = weight(i) * (response[i] - fitted);
    for (std::size_t a = 0; a < k; ++a) correction[a] += row[a] * r;
  }
  for (std::size_t a = 0; a < k; ++a) correction[a] *= scale[a];
  cholesky_solve(chol, k, correction);
  for (std::size_t a = 0; a < k; ++a) coef[a] += correction[a] * scale[a];
  return coef;
}

// Rational approximation of the normal quantile on (0, 0.5], relative error
// about 1.15e-9 before refinement.
double quantile_rational_lower(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;
  if (p < kLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIterations = 100000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;
}

// I_x(a, b) given both x and y = 1 - x, so callers can pass an accurately
// computed complement.
double incomplete_beta(double x, double y, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front =
      a * std::log(x) + b * std::log(y) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * beta_continued_fraction(x, a, b) / a;
  }
  return 1.0 - std::exp(log_front) * beta_continued_fraction(y, b, a) / b;
}

}  // namespace

std::vector<double> solve_least_squares(const Matrix& design,
                                        std::span<const double> response) {
  return solve_impl(design, response, {});
}

std::vector<double> solve_weighted_least_squares(const Matrix& design,
                                                 std::span<const double> response,
                                                 std::span<const double> weights) {
  if (weights.size() != design.rows()) {
    throw LateError(ErrorCode::kDomainError, "weight length mismatch");
  }
  return solve_impl(design, response, weights);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0) {
    throw LateError(ErrorCode::kDomainError, "probability outside [0, 1]");
  }
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  if (p == 0.5) return 0.0;
  // Work in the lower half, where 1 - p is exact and the CDF is computed
  // with full relative accuracy.
  const bool upper = p > 0.5;
  const double q = upper ? 1.0 - p : p;
  double x = quantile_rational_lower(q);
  // Halley refinement.
  const double e = normal_cdf(x) - q;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return upper ? -x : x;
}

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw LateError(ErrorCode::kDomainError, "incomplete beta argument out of range");
  }
  return incomplete_beta(x, 1.0 - x, a, b);
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) {
    throw LateError(ErrorCode::kDomainError, "degrees of freedom must be positive");
  }
  if (std::isnan(t)) return t;
  if (std::isinf(df)) return normal_cdf(t);
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double t2 = t * t;
  const double x = df / (df + t2);
  const double y = t2 / (df + t2);
  const double tail = 0.5 * incomplete_beta(x, y, 0.5 * df, 0.5);
  return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df) {
  if (!(df > 0.0)) {
    throw LateError(ErrorCode::kDomainError, "degrees of freedom must be positive");
  }
  if (!(p > 0.0 && p < 1.0)) {
    throw LateError(ErrorCode::kDomainError, "probability outside (0, 1)");
  }
  if (std::isinf(df)) return normal_quantile(p);
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, df);

  // Safeguarded Newton on [lo, hi] with cdf(lo) < p <= cdf(hi).
  double lo = 0.0;
  double hi = std::max(1.0, normal_quantile(p));
  while (student_t_cdf(hi, df) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return std::numeric_limits<double>::infinity();
  }
  const double log_norm = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                          0.5 * std::log(df * std::numbers::pi);
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = student_t_cdf(x, df) - p;
    if (f == 0.0) return x;
    if (f < 0.0) lo = x; else hi = x;
    const double pdf =
        std::exp(log_norm - 0.5 * (df + 1.0) * std::log1p(x * x / df));
    double next = x - f / pdf;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-15 * std::max(1.0, std::fabs(x))) return next;
    x = next;
  }
  return x;
}

}  // namespace late
