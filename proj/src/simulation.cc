#include "late/simulation.h"

#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include <omp.h>

#include "late/error.h"
#include "late/numerics.h"

namespace late {

void SimulationConfig::validate() const {
  auto fail = [](const char* what) { throw LateError(ErrorCode::kDomainError, what); };
  if (n < 4) fail("n must be at least 4");
  if (!(p > 0.0 && p < 1.0)) fail("p must lie in (0, 1)");
  const std::size_t n1 = treated();
  if (n1 == 0 || n1 >= n) fail("round(n * p) must leave both arms nonempty");
  if (!(dbar0 >= 0.0 && dbar1 <= 1.0 && dbar0 < dbar1)) {
    fail("need 0 <= dbar0 < dbar1 <= 1");
  }
  if (!(std::fabs(rho_delta_y0) < 1.0)) fail("rho_delta_y0 must lie in (-1, 1)");
  if (!(r2_y0x > 0.0 && r2_y0x < 1.0)) fail("r2_y0x must lie in (0, 1)");
  if (!(std::fabs(rho_delta_theta) < 1.0)) fail("rho_delta_theta must lie in (-1, 1)");
  if (!(sigma_theta2_rule >= 0.0) || !std::isfinite(sigma_theta2_rule)) {
    fail("sigma_theta2_rule must be nonnegative");
  }
  if (num_datasets == 0) fail("num_datasets must be positive");
  if (reps < 2) fail("reps must be at least 2");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (variance_methods.empty()) {
    throw LateError(ErrorCode::kInvalidConfig, "no variance methods requested");
  }
  for (std::size_t i = 0; i < variance_methods.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (variance_methods[i] == variance_methods[j]) {
        throw LateError(ErrorCode::kInvalidConfig, "duplicate variance method");
      }
    }
  }
}

std::size_t SimulationConfig::treated() const {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * p));
}

PotentialPopulation generate_population(const SimulationConfig& cfg,
                                        std::size_t dataset_index) {
  cfg.validate();
  RandomStream stream(derive_seed(cfg.seed, dataset_index, kPopulationStream));
  const double always_cut = normal_quantile(cfg.dbar0);
  const double complier_cut = normal_quantile(cfg.dbar1);
  const double rho = cfg.rho_delta_y0;
  const double phi = rho / std::sqrt(1.0 - rho * rho);
  const double var_y0 = phi * phi + 1.0;
  const double sd_u = std::sqrt(var_y0 * (1.0 - cfg.r2_y0x) / cfg.r2_y0x);
  const double var_theta = cfg.sigma_theta2_rule * var_y0;
  const double psi = cfg.rho_delta_theta * std::sqrt(var_theta);
  const double sd_v =
      std::sqrt(var_theta * (1.0 - cfg.rho_delta_theta * cfg.rho_delta_theta));

  const std::size_t n = cfg.n;
  PotentialPopulation pop;
  pop.y1.resize(n);
  pop.y0.resize(n);
  pop.d1.resize(n);
  pop.d0.resize(n);
  pop.x = Matrix(n, cfg.with_covariate ? 1 : 0);
  pop.delta.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = stream.normal();
    const double eta = stream.normal();
    const double u = stream.normal();
    const double v = stream.normal();
    const double y0 = phi * delta + eta;
    const double theta = psi * delta + sd_v * v;
    (*pop.delta)[i] = delta;
    pop.d0[i] = delta <= always_cut ? 1 : 0;
    pop.d1[i] = delta <= complier_cut ? 1 : 0;
    pop.y0[i] = y0;
    pop.y1[i] = (pop.d1[i] == 1 && pop.d0[i] == 0) ? y0 + theta : y0;
    if (cfg.with_covariate) pop.x(i, 0) = y0 + sd_u * u;
  }
  return pop;
}

std::vector<int> draw_assignment(std::size_t n, std::size_t n1, RandomStream& stream) {
  if (!(n1 > 0 && n1 < n)) {
    throw LateError(ErrorCode::kDomainError, "need 0 < n1 < n");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> t(n, 0);
  for (std::size_t i = 0; i < n1; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(stream.bounded(n - i));
    std::swap(order[i], order[j]);
    t[order[i]] = 1;
  }
  return t;
}

Dataset reveal(const PotentialPopulation& pop, std::span<const int> t) {
  Dataset data;
  data.y = pop.observed_outcome(t);
  data.d = pop.observed_receipt(t);
  data.t.assign(t.begin(), t.end());
  data.x = pop.x;
  return data;
}

namespace {

double replication_df(const SimulationConfig& cfg) {
  return static_cast<double>(cfg.n) - static_cast<double>(cfg.with_covariate ? 1 : 0) -
         2.0;
}

ReplicationRecord replicate(const PotentialPopulation& pop, const SimulationConfig& cfg,
                            std::size_t dataset_index, std::size_t rep, double truth,
                            double critical) {
  RandomStream stream(derive_seed(cfg.seed, dataset_index, rep));
  const std::vector<int> t = draw_assignment(cfg.n, cfg.treated(), stream);
  const Dataset data = reveal(pop, t);
  const std::size_t v = data.num_covariates();
  const double df = replication_df(cfg);

  ReplicationRecord record;
  PointEstimate est;
  try {
    est = estimate_late(data);
  } catch (const LateError& error) {
    if (error.code() != ErrorCode::kZeroComplianceEffect) throw;
    return record;
  }
  record.ok = true;
  record.tau_late = est.tau_late;
  const DbVariance db = variance_db(est.fit_y, est.fit_d, est.tau_late, v);
  for (VarianceMethod method : cfg.variance_methods) {
    double variance = 0.0;
    switch (method) {
      case VarianceMethod::kDb:
        variance = db.variance;
        break;
      case VarianceMethod::kDbBounded:
        variance = variance_db_bounded(db, cfg.n).variance;
        break;
      case VarianceMethod::kIv:
        variance = variance_iv(est.fit_y, est.fit_d, est.tau_late, v);
        break;
    }
    const Inference inf =
        infer_with_critical(est.tau_late, variance, critical, df, cfg.reference);
    const auto slot = static_cast<std::size_t>(method);
    record.se[slot] = std::sqrt(variance);
    record.covered[slot] = inf.ci_lower <= truth && truth <= inf.ci_upper;
  }
  return record;
}

double config_critical(const SimulationConfig& cfg) {
  return critical_value(cfg.alpha, replication_df(cfg), cfg.reference);
}

}  // namespace

ReplicationRecord run_replication(const PotentialPopulation& pop,
                                  const SimulationConfig& cfg, std::size_t dataset_index,
                                  std::size_t rep, double truth) {
  return replicate(pop, cfg, dataset_index, rep, truth, config_critical(cfg));
}

std::vector<ReplicationRecord> run_replications(const PotentialPopulation& pop,
                                                const SimulationConfig& cfg,
                                                std::size_t dataset_index, double truth,
                                                int threads) {
  const double critical = config_critical(cfg);
  const auto reps = static_cast<std::ptrdiff_t>(cfg.reps);
  std::vector<ReplicationRecord> records(cfg.reps);
  std::vector<std::exception_ptr> errors(cfg.reps);
  const int workers = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 64) num_threads(workers)
  for (std::ptrdiff_t r = 0; r < reps; ++r) {
    try {
      records[r] = replicate(pop, cfg, dataset_index, static_cast<std::size_t>(r), truth,
                             critical);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return records;
}

std::vector<ReplicationRecord> run_replications_serial(const PotentialPopulation& pop,
                                                       const SimulationConfig& cfg,
                                                       std::size_t dataset_index,
                                                       double truth) {
  const double critical = config_critical(cfg);
  std::vector<ReplicationRecord> records(cfg.reps);
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    records[r] = replicate(pop, cfg, dataset_index, r, truth, critical);
  }
  return records;
}

DatasetSummary summarize_dataset(std::span<const ReplicationRecord> records,
                                 const SimulationConfig& cfg, double truth) {
  DatasetSummary out;
  out.tau_10 = truth;
  std::size_t used = 0;
  double sum = 0.0;
  for (const ReplicationRecord& r : records) {
    if (!r.ok) continue;
    ++used;
    sum += r.tau_late;
  }
  const std::size_t rejected = records.size() - used;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double mean = used > 0 ? sum / static_cast<double>(used) : nan;
  double ss = 0.0;
  for (const ReplicationRecord& r : records) {
    if (r.ok) ss += (r.tau_late - mean) * (r.tau_late - mean);
  }
  const double sd = used > 1 ? std::sqrt(ss / static_cast<double>(used - 1)) : nan;
  for (VarianceMethod method : cfg.variance_methods) {
    const auto slot = static_cast<std::size_t>(method);
    double se_sum = 0.0;
    std::size_t hits = 0;
    for (const ReplicationRecord& r : records) {
      if (!r.ok) continue;
      se_sum += r.se[slot];
      hits += r.covered[slot] ? 1 : 0;
    }
    MethodSummary m;
    m.method = method;
    m.bias = mean - truth;
    m.true_se = sd;
    m.coverage = used > 0 ? static_cast<double>(hits) / static_cast<double>(used) : nan;
    m.mean_est_se = used > 0 ? se_sum / static_cast<double>(used) : nan;
    m.rejected_replications = rejected;
    out.methods.push_back(m);
  }
  return out;
}

namespace {

SimulationSummary monte_carlo(const SimulationConfig& cfg, bool parallel, int threads) {
  cfg.validate();
  SimulationSummary out;
  out.config = cfg;
  out.n1 = cfg.treated();
  const double p = static_cast<double>(out.n1) / static_cast<double>(cfg.n);
  for (std::size_t k = 0; k < cfg.num_datasets; ++k) {
    const PotentialPopulation pop = generate_population(cfg, k);
    const std::uint64_t before = population_checksum(pop);
    const TrueQuantities truth = true_estimands(pop, p);
    const std::vector<ReplicationRecord> records =
        parallel ? run_replications(pop, cfg, k, truth.tau_10, threads)
                 : run_replications_serial(pop, cfg, k, truth.tau_10);
    if (population_checksum(pop) != before) {
      throw LateError(ErrorCode::kDomainError, "potential outcomes changed during replication");
    }
    DatasetSummary ds = summarize_dataset(records, cfg, truth.tau_10);
    ds.index = k;
    ds.pi_itt = truth.pi_itt;
    ds.checksum = before;
    out.datasets.push_back(std::move(ds));
  }
  const double count = static_cast<double>(cfg.num_datasets);
  for (std::size_t j = 0; j < cfg.variance_methods.size(); ++j) {
    MethodSummary avg;
    avg.method = cfg.variance_methods[j];
    for (const DatasetSummary& ds : out.datasets) {
      const MethodSummary& m = ds.methods[j];
      avg.bias += m.bias / count;
      avg.coverage += m.coverage / count;
      avg.true_se += m.true_se / count;
      avg.mean_est_se += m.mean_est_se / count;
      avg.rejected_replications += m.rejected_replications;
    }
    out.methods.push_back(avg);
  }
  return out;
}

}  // namespace

SimulationSummary run_monte_carlo(const SimulationConfig& cfg, int threads) {
  return monte_carlo(cfg, true, threads);
}

SimulationSummary run_monte_carlo_serial(const SimulationConfig& cfg) {
  return monte_carlo(cfg, false, 0);
}

}  // namespace late
