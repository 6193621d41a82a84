#ifndef LATE_SIMULATION_H_
#define LATE_SIMULATION_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "late/estimator.h"
#include "late/oracle.h"
#include "late/random.h"

namespace late {

struct SimulationConfig {
  std::size_t n = 400;
  double p = 0.5;
  double dbar0 = 0.2;
  double dbar1 = 0.5;
  double rho_delta_y0 = 0.3;
  double r2_y0x = 0.4;
  double rho_delta_theta = 0.1;
  double sigma_theta2_rule = 1.0 / 3.0;  // multiple of Var(Y(0))
  bool with_covariate = false;
  std::size_t num_datasets = 5;
  std::size_t reps = 10000;
  double alpha = 0.05;
  std::uint64_t seed = 20240101;
  std::vector<VarianceMethod> variance_methods = {VarianceMethod::kDb,
                                                  VarianceMethod::kDbBounded,
                                                  VarianceMethod::kIv};
  Reference reference = Reference::kT;

  // Throws DomainError (or InvalidConfig for empty method lists).
  void validate() const;
  // round(n * p)
  std::size_t treated() const;
};

// Latent-index population for one dataset. Draws come from the substream
// derive_seed(seed, dataset_index, kPopulationStream). The covariate draw is
// made whether or not it is used, so a population with and without the
// covariate share every potential outcome.
PotentialPopulation generate_population(const SimulationConfig& cfg,
                                        std::size_t dataset_index);

inline constexpr std::uint64_t kPopulationStream = ~std::uint64_t{0};

// Exactly n1 ones; uniform over subsets via a partial Fisher-Yates shuffle.
std::vector<int> draw_assignment(std::size_t n, std::size_t n1, RandomStream& stream);

// Observed data for one assignment.
Dataset reveal(const PotentialPopulation& pop, std::span<const int> t);

struct ReplicationRecord {
  bool ok = false;  // false when the compliance estimate was zero
  double tau_late = 0.0;
  std::array<double, 3> se{};       // indexed by VarianceMethod
  std::array<bool, 3> covered{};
};

// One replication with substream derive_seed(seed, dataset_index, rep).
ReplicationRecord run_replication(const PotentialPopulation& pop,
                                  const SimulationConfig& cfg, std::size_t dataset_index,
                                  std::size_t rep, double truth);

// All replications for one dataset, in replication order. threads = 0 uses
// the OpenMP default.
std::vector<ReplicationRecord> run_replications(const PotentialPopulation& pop,
                                                const SimulationConfig& cfg,
                                                std::size_t dataset_index, double truth,
                                                int threads = 0);
std::vector<ReplicationRecord> run_replications_serial(const PotentialPopulation& pop,
                                                       const SimulationConfig& cfg,
                                                       std::size_t dataset_index,
                                                       double truth);

struct MethodSummary {
  VarianceMethod method = VarianceMethod::kDb;
  double bias = 0.0;
  double coverage = 0.0;
  double true_se = 0.0;  // sd of the estimates across replications
  double mean_est_se = 0.0;
  std::size_t rejected_replications = 0;
};

struct DatasetSummary {
  std::size_t index = 0;
  double tau_10 = 0.0;
  double pi_itt = 0.0;
  std::uint64_t checksum = 0;
  std::vector<MethodSummary> methods;
};

struct SimulationSummary {
  SimulationConfig config;
  std::size_t n1 = 0;
  // Averages of the per-dataset summaries; rejected counts are summed.
  std::vector<MethodSummary> methods;
  std::vector<DatasetSummary> datasets;
};

// Reduces replication records in index order.
DatasetSummary summarize_dataset(std::span<const ReplicationRecord> records,
                                 const SimulationConfig& cfg, double truth);

SimulationSummary run_monte_carlo(const SimulationConfig& cfg, int threads = 0);
SimulationSummary run_monte_carlo_serial(const SimulationConfig& cfg);

}  // namespace late

#endif  // LATE_SIMULATION_H_
