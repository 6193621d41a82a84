#ifndef LATE_ORACLE_H_
#define LATE_ORACLE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "late/numerics.h"

namespace late {

// Fully known potential outcomes for a finite population.
struct PotentialPopulation {
  std::vector<double> y1;
  std::vector<double> y0;
  std::vector<int> d1;
  std::vector<int> d0;
  Matrix x;  // n x V, V may be 0
  std::optional<std::vector<double>> delta;

  std::size_t n() const { return y1.size(); }

  // Checks lengths, binary receipt, monotonicity (no defiers) and the
  // exclusion restriction (y1 == y0 wherever d1 == d0).
  void validate() const;

  // Observed outcome and receipt under an assignment vector.
  std::vector<double> observed_outcome(std::span<const int> t) const;
  std::vector<double> observed_receipt(std::span<const int> t) const;
};

// FNV-1a digest over every stored value, for finite-population discipline
// checks.
std::uint64_t population_checksum(const PotentialPopulation& pop);

struct StrataShares {
  double always_taker = 0.0;
  double complier = 0.0;
  double never_taker = 0.0;
};

struct TrueQuantities {
  double tau_itt = 0.0;
  double pi_itt = 0.0;
  double tau_10 = 0.0;
  StrataShares shares;
  std::vector<double> beta_star;
  std::vector<double> gamma_star;
  double var_qbar = 0.0;
  double s2_r1 = 0.0;
  double s2_r0 = 0.0;
  double s2_r10 = 0.0;
  double s2_tau = 0.0;
};

// Population estimands for assignment rate p: ITT effects, the complier
// effect, strata shares, and the covariate projections beta*, gamma* of the
// p-mixtures of potential outcomes on grand-centered x.
TrueQuantities true_estimands(const PotentialPopulation& pop, double p);

// true_estimands plus the linearized residual variances and the exact
// randomization variance of the linearized contrast for n1 treated units.
TrueQuantities true_var_qbar(const PotentialPopulation& pop, std::size_t n1, double p);

// Linearized residuals R_i(t) for arm t in {0, 1} given estimand fields.
std::vector<double> linearized_residuals(const PotentialPopulation& pop,
                                         const TrueQuantities& truth, int arm);

enum class EnumeratedEstimator { kIttY, kIttD, kLate, kLinearizedQbar };

// Exact randomization distribution: every size-n1 subset in lexicographic
// order, each with probability 1 / C(n, n1).
struct ExactDistribution {
  std::size_t n = 0;
  std::size_t n1 = 0;
  std::vector<std::uint32_t> treated;  // flat, n1 indices per entry
  std::vector<double> estimates;
  std::vector<char> defined;
  std::size_t undefined_count = 0;
  double probability = 0.0;
  // Moments over defined entries (population normalization).
  double mean = 0.0;
  double variance = 0.0;

  std::size_t size() const { return estimates.size(); }
  std::span<const std::uint32_t> treated_units(std::size_t entry) const {
    return {treated.data() + entry * n1, n1};
  }
};

inline constexpr double kMaxEnumeration = 1e6;

// Throws kTooLarge when C(n, n1) exceeds kMaxEnumeration. The parallel
// and serial variants return identical distributions.
ExactDistribution enumerate_assignments(const PotentialPopulation& pop,
                                        std::size_t n1,
                                        EnumeratedEstimator estimator);
ExactDistribution enumerate_assignments_serial(const PotentialPopulation& pop,
                                               std::size_t n1,
                                               EnumeratedEstimator estimator);

double binomial_coefficient(std::size_t n, std::size_t k);

}  // namespace late

#endif  // LATE_ORACLE_H_
