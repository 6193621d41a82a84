#include "late/oracle.h"

#include <cmath>
#include <cstring>
#include <string>

#include "late/error.h"
#include "late/estimator.h"

namespace late {

void PotentialPopulation::validate() const {
  const std::size_t rows = n();
  if (y0.size() != rows || d1.size() != rows || d0.size() != rows ||
      x.rows() != rows) {
    throw LateError(ErrorCode::kDomainError, "population columns differ in length");
  }
  if (delta && delta->size() != rows) {
    throw LateError(ErrorCode::kDomainError, "latent column length differs");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if ((d1[i] != 0 && d1[i] != 1) || (d0[i] != 0 && d0[i] != 1)) {
      throw LateError(ErrorCode::kDomainError, "receipt must be binary");
    }
    if (d1[i] < d0[i]) {
      throw LateError(ErrorCode::kDomainError,
                      "defier at unit " + std::to_string(i) + " violates monotonicity");
    }
    if (d1[i] == d0[i] && y1[i] != y0[i]) {
      throw LateError(ErrorCode::kDomainError,
                      "unit " + std::to_string(i) + " violates the exclusion restriction");
    }
    if (!std::isfinite(y1[i]) || !std::isfinite(y0[i])) {
      throw LateError(ErrorCode::kDomainError, "non-finite potential outcome");
    }
  }
}

std::vector<double> PotentialPopulation::observed_outcome(std::span<const int> t) const {
  std::vector<double> out(n());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t[i] ? y1[i] : y0[i];
  return out;
}

std::vector<double> PotentialPopulation::observed_receipt(std::span<const int> t) const {
  std::vector<double> out(n());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<double>(t[i] ? d1[i] : d0[i]);
  }
  return out;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

template <typename T>
void fnv_mix(std::uint64_t& h, std::span<const T> values) {
  for (const T& v : values) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= kFnvPrime;
    }
  }
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e;
  return s / static_cast<double>(v.size());
}

double mean(std::span<const int> v) {
  double s = 0.0;
  for (int e : v) s += e;
  return s / static_cast<double>(v.size());
}

// Slopes from regressing response on (1, x - xbar).
std::vector<double> projection(const Matrix& x, std::span<const double> response) {
  const std::size_t n = x.rows();
  const std::size_t v = x.cols();
  if (v == 0) return {};
  std::vector<double> xbar(v, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < v; ++c) xbar[c] += x(i, c);
  }
  for (double& m : xbar) m /= static_cast<double>(n);
  Matrix design(n, v + 1);
  for (std::size_t i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (std::size_t c = 0; c < v; ++c) design(i, c + 1) = x(i, c) - xbar[c];
  }
  std::vector<double> coef = solve_least_squares(design, response);
  return {coef.begin() + 1, coef.end()};
}

}  // namespace

std::uint64_t population_checksum(const PotentialPopulation& pop) {
  std::uint64_t h = kFnvOffset;
  fnv_mix<double>(h, pop.y1);
  fnv_mix<double>(h, pop.y0);
  fnv_mix<int>(h, pop.d1);
  fnv_mix<int>(h, pop.d0);
  for (std::size_t i = 0; i < pop.x.rows(); ++i) fnv_mix<double>(h, pop.x.row(i));
  if (pop.delta) fnv_mix<double>(h, *pop.delta);
  return h;
}

TrueQuantities true_estimands(const PotentialPopulation& pop, double p) {
  pop.validate();
  if (!(p > 0.0 && p < 1.0)) {
    throw LateError(ErrorCode::kDomainError, "assignment rate must lie in (0, 1)");
  }
  if (pop.n() < 2) throw LateError(ErrorCode::kDomainError, "population needs n >= 2");
  TrueQuantities q;
  const double d1_mean = mean(std::span<const int>(pop.d1));
  const double d0_mean = mean(std::span<const int>(pop.d0));
  q.tau_itt = mean(pop.y1) - mean(pop.y0);
  q.pi_itt = d1_mean - d0_mean;
  if (!(std::fabs(q.pi_itt) > kComplianceThreshold)) {
    throw LateError(ErrorCode::kZeroComplianceEffect, "population has no compliers");
  }
  q.tau_10 = q.tau_itt / q.pi_itt;
  q.shares.always_taker = d0_mean;
  q.shares.never_taker = 1.0 - d1_mean;
  q.shares.complier = q.pi_itt;

  if (pop.x.cols() > 0) {
    const std::size_t n = pop.n();
    std::vector<double> mix_y(n);
    std::vector<double> mix_d(n);
    for (std::size_t i = 0; i < n; ++i) {
      mix_y[i] = p * pop.y1[i] + (1.0 - p) * pop.y0[i];
      mix_d[i] = p * pop.d1[i] + (1.0 - p) * pop.d0[i];
    }
    q.beta_star = projection(pop.x, mix_y);
    q.gamma_star = projection(pop.x, mix_d);
  }
  return q;
}

std::vector<double> linearized_residuals(const PotentialPopulation& pop,
                                         const TrueQuantities& truth, int arm) {
  const std::size_t n = pop.n();
  const std::size_t v = pop.x.cols();
  const std::vector<double>& y = arm == 1 ? pop.y1 : pop.y0;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = arm == 1 ? pop.d1[i] : pop.d0[i];
  const double ybar = mean(y);
  const double dbar = mean(d);
  std::vector<double> xbar(v, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < v; ++c) xbar[c] += pop.x(i, c);
  }
  for (double& m : xbar) m /= static_cast<double>(n);

  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ey = y[i] - ybar;
    double ed = d[i] - dbar;
    for (std::size_t c = 0; c < v; ++c) {
      const double xc = pop.x(i, c) - xbar[c];
      ey -= xc * truth.beta_star[c];
      ed -= xc * truth.gamma_star[c];
    }
    r[i] = (ey - truth.tau_10 * ed) / truth.pi_itt;
  }
  return r;
}

TrueQuantities true_var_qbar(const PotentialPopulation& pop, std::size_t n1, double p) {
  TrueQuantities q = true_estimands(pop, p);
  const std::size_t n = pop.n();
  if (n1 == 0 || n1 >= n) {
    throw LateError(ErrorCode::kDomainError, "n1 must lie in [1, n-1]");
  }
  const std::vector<double> r1 = linearized_residuals(pop, q, 1);
  const std::vector<double> r0 = linearized_residuals(pop, q, 0);
  double s11 = 0.0, s00 = 0.0, s10 = 0.0, stau = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s11 += r1[i] * r1[i];
    s00 += r0[i] * r0[i];
    s10 += r1[i] * r0[i];
    const double diff = r1[i] - r0[i];
    stau += diff * diff;
  }
  const double denom = static_cast<double>(n - 1);
  q.s2_r1 = s11 / denom;
  q.s2_r0 = s00 / denom;
  q.s2_r10 = s10 / denom;
  q.s2_tau = stau / denom;
  const double n0 = static_cast<double>(n - n1);
  q.var_qbar = q.s2_r1 / static_cast<double>(n1) + q.s2_r0 / n0 -
               q.s2_tau / static_cast<double>(n);
  return q;
}

double binomial_coefficient(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(c);
}

namespace {

struct EnumerationSetup {
  ExactDistribution dist;
  std::vector<double> r1;
  std::vector<double> r0;
};

EnumerationSetup prepare_enumeration(const PotentialPopulation& pop, std::size_t n1,
                                     EnumeratedEstimator estimator) {
  pop.validate();
  const std::size_t n = pop.n();
  if (n1 == 0 || n1 >= n) {
    throw LateError(ErrorCode::kDomainError, "n1 must lie in [1, n-1]");
  }
  const double count = binomial_coefficient(n, n1);
  if (count > kMaxEnumeration) {
    throw LateError(ErrorCode::kTooLarge,
                    "C(" + std::to_string(n) + ", " + std::to_string(n1) +
                        ") assignments exceed the enumeration guard");
  }
  EnumerationSetup setup;
  ExactDistribution& dist = setup.dist;
  dist.n = n;
  dist.n1 = n1;
  const auto entries = static_cast<std::size_t>(count);
  dist.treated.reserve(entries * n1);
  std::vector<std::uint32_t> combo(n1);
  for (std::size_t i = 0; i < n1; ++i) combo[i] = static_cast<std::uint32_t>(i);
  while (true) {
    dist.treated.insert(dist.treated.end(), combo.begin(), combo.end());
    std::size_t i = n1;
    while (i > 0 && combo[i - 1] == n - n1 + i - 1) --i;
    if (i == 0) break;
    ++combo[i - 1];
    for (std::size_t j = i; j < n1; ++j) combo[j] = combo[j - 1] + 1;
  }
  dist.estimates.assign(entries, 0.0);
  dist.defined.assign(entries, 1);
  dist.probability = 1.0 / static_cast<double>(entries);

  if (estimator == EnumeratedEstimator::kLinearizedQbar) {
    const TrueQuantities truth =
        true_estimands(pop, static_cast<double>(n1) / static_cast<double>(n));
    setup.r1 = linearized_residuals(pop, truth, 1);
    setup.r0 = linearized_residuals(pop, truth, 0);
  }
  return setup;
}

void evaluate_entry(const PotentialPopulation& pop, EnumeratedEstimator estimator,
                    EnumerationSetup& setup, std::size_t entry) {
  ExactDistribution& dist = setup.dist;
  std::vector<int> t(dist.n, 0);
  for (std::uint32_t u : dist.treated_units(entry)) t[u] = 1;
  try {
    switch (estimator) {
      case EnumeratedEstimator::kIttY:
        dist.estimates[entry] = fit_itt(pop.observed_outcome(t), t, pop.x).effect;
        break;
      case EnumeratedEstimator::kIttD:
        dist.estimates[entry] = fit_itt(pop.observed_receipt(t), t, pop.x).effect;
        break;
      case EnumeratedEstimator::kLate: {
        const IttFit fy = fit_itt(pop.observed_outcome(t), t, pop.x);
        const IttFit fd = fit_itt(pop.observed_receipt(t), t, pop.x);
        if (!(std::fabs(fd.effect) > kComplianceThreshold)) {
          dist.defined[entry] = 0;
        } else {
          dist.estimates[entry] = fy.effect / fd.effect;
        }
        break;
      }
      case EnumeratedEstimator::kLinearizedQbar: {
        double s1 = 0.0, s0 = 0.0;
        for (std::size_t i = 0; i < dist.n; ++i) {
          if (t[i]) s1 += setup.r1[i]; else s0 += setup.r0[i];
        }
        dist.estimates[entry] = s1 / static_cast<double>(dist.n1) -
                                s0 / static_cast<double>(dist.n - dist.n1);
        break;
      }
    }
  } catch (const LateError&) {
    dist.defined[entry] = 0;
  }
}

void summarize(ExactDistribution& dist) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t e = 0; e < dist.size(); ++e) {
    if (!dist.defined[e]) continue;
    sum += dist.estimates[e];
    ++count;
  }
  dist.undefined_count = dist.size() - count;
  if (count == 0) return;
  dist.mean = sum / static_cast<double>(count);
  double ss = 0.0;
  for (std::size_t e = 0; e < dist.size(); ++e) {
    if (!dist.defined[e]) continue;
    const double dev = dist.estimates[e] - dist.mean;
    ss += dev * dev;
  }
  dist.variance = ss / static_cast<double>(count);
}

}  // namespace

ExactDistribution enumerate_assignments(const PotentialPopulation& pop, std::size_t n1,
                                        EnumeratedEstimator estimator) {
  EnumerationSetup setup = prepare_enumeration(pop, n1, estimator);
  const auto entries = static_cast<std::ptrdiff_t>(setup.dist.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t e = 0; e < entries; ++e) {
    evaluate_entry(pop, estimator, setup, static_cast<std::size_t>(e));
  }
  summarize(setup.dist);
  return std::move(setup.dist);
}

ExactDistribution enumerate_assignments_serial(const PotentialPopulation& pop,
                                               std::size_t n1,
                                               EnumeratedEstimator estimator) {
  EnumerationSetup setup = prepare_enumeration(pop, n1, estimator);
  for (std::size_t e = 0; e < setup.dist.size(); ++e) {
    evaluate_entry(pop, estimator, setup, e);
  }
  summarize(setup.dist);
  return std::move(setup.dist);
}

}  // namespace late
