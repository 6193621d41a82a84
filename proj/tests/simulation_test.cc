#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "late/error.h"
#include "late/simulation.h"

namespace late {
namespace {

SimulationConfig small_config() {
  SimulationConfig cfg;
  cfg.n = 60;
  cfg.num_datasets = 2;
  cfg.reps = 300;
  return cfg;
}

TEST(Random, SeedsAreDistinctAndStable) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
  RandomStream a(7), b(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Random, UniformAndBoundedRanges) {
  RandomStream s(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = s.bounded(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Random, NormalMoments) {
  RandomStream s(11);
  const int n = 200000;
  double sum = 0, sum2 = 0, sum4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sum2 += z * z;
    sum4 += z * z * z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sum2 / n, 1.0, 0.01);
  EXPECT_NEAR(sum4 / n, 3.0, 0.06);
}

// Strata follow the cuts at Phi^{-1}(dbar0) and Phi^{-1}(dbar1).
TEST(Generator, StrataFollowLatentIndex) {
  SimulationConfig cfg;
  cfg.n = 2000;
  cfg.dbar0 = 0.2;
  cfg.dbar1 = 0.5;
  const PotentialPopulation pop = generate_population(cfg, 0);
  ASSERT_TRUE(pop.delta.has_value());
  for (std::size_t i = 0; i < pop.n(); ++i) {
    const double delta = (*pop.delta)[i];
    if (delta <= -0.8416212335729143) {
      EXPECT_EQ(pop.d0[i], 1);
      EXPECT_EQ(pop.d1[i], 1);
      EXPECT_EQ(pop.y1[i], pop.y0[i]);
    } else if (delta <= 0.0) {
      EXPECT_EQ(pop.d0[i], 0);
      EXPECT_EQ(pop.d1[i], 1);
    } else {
      EXPECT_EQ(pop.d0[i], 0);
      EXPECT_EQ(pop.d1[i], 0);
      EXPECT_EQ(pop.y1[i], pop.y0[i]);
    }
  }
  EXPECT_NO_THROW(pop.validate());
}

TEST(Generator, FullComplianceWhenCutsAreExtreme) {
  SimulationConfig cfg;
  cfg.n = 500;
  cfg.dbar0 = 0.0;
  cfg.dbar1 = 1.0;
  const PotentialPopulation pop = generate_population(cfg, 1);
  for (std::size_t i = 0; i < pop.n(); ++i) {
    EXPECT_EQ(pop.d0[i], 0);
    EXPECT_EQ(pop.d1[i], 1);
  }
}

TEST(Generator, StrataSharesAndMoments) {
  SimulationConfig cfg;
  cfg.n = 100000;
  cfg.with_covariate = true;
  const PotentialPopulation pop = generate_population(cfg, 0);
  double at = 0, co = 0;
  const double n = static_cast<double>(pop.n());
  double my0 = 0, md = 0, mx = 0;
  for (std::size_t i = 0; i < pop.n(); ++i) {
    at += pop.d0[i];
    co += pop.d1[i] - pop.d0[i];
    my0 += pop.y0[i];
    md += (*pop.delta)[i];
    mx += pop.x(i, 0);
  }
  EXPECT_NEAR(at / n, cfg.dbar0, 0.01);
  EXPECT_NEAR(co / n, cfg.dbar1 - cfg.dbar0, 0.01);
  my0 /= n;
  md /= n;
  mx /= n;
  double syy = 0, sdd = 0, syd = 0, sxx = 0, sxy = 0;
  double s1 = 0, m1 = 0;
  for (std::size_t i = 0; i < pop.n(); ++i) m1 += pop.y1[i] / n;
  for (std::size_t i = 0; i < pop.n(); ++i) {
    const double y = pop.y0[i] - my0, dl = (*pop.delta)[i] - md, x = pop.x(i, 0) - mx;
    syy += y * y;
    sdd += dl * dl;
    syd += y * dl;
    sxx += x * x;
    sxy += x * y;
    s1 += (pop.y1[i] - m1) * (pop.y1[i] - m1);
  }
  EXPECT_NEAR(syd / std::sqrt(syy * sdd), cfg.rho_delta_y0, 0.02);
  EXPECT_NEAR(sxy * sxy / (sxx * syy), cfg.r2_y0x, 0.02);
  EXPECT_GT(s1, syy);
}

TEST(Generator, CovariateDoesNotChangeOutcomes) {
  SimulationConfig cfg = small_config();
  const PotentialPopulation a = generate_population(cfg, 1);
  cfg.with_covariate = true;
  const PotentialPopulation b = generate_population(cfg, 1);
  EXPECT_EQ(a.y0, b.y0);
  EXPECT_EQ(a.y1, b.y1);
  EXPECT_EQ(a.d1, b.d1);
  EXPECT_EQ(b.x.cols(), 1u);
}

TEST(Assignment, ExactCountAndUniformOverSubsets) {
  RandomStream s(5);
  std::map<std::vector<int>, int> seen;
  const int draws = 60000;
  for (int k = 0; k < draws; ++k) {
    const std::vector<int> t = draw_assignment(5, 2, s);
    int ones = 0;
    for (int v : t) ones += v;
    ASSERT_EQ(ones, 2);
    ++seen[t];
  }
  ASSERT_EQ(seen.size(), 10u);
  // Chi-square with 9 df; the 0.999 quantile is 27.88.
  double chi2 = 0.0;
  for (const auto& [t, c] : seen) {
    const double e = draws / 10.0;
    chi2 += (c - e) * (c - e) / e;
  }
  EXPECT_LT(chi2, 27.88);
  EXPECT_THROW(draw_assignment(5, 0, s), LateError);
  EXPECT_THROW(draw_assignment(5, 5, s), LateError);
}

TEST(Config, Validation) {
  SimulationConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.treated(), 200u);
  auto bad = [](auto mutate) {
    SimulationConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), LateError);
  };
  bad([](SimulationConfig& c) { c.p = 1.0; });
  bad([](SimulationConfig& c) { c.dbar0 = 0.6; });
  bad([](SimulationConfig& c) { c.rho_delta_y0 = 1.0; });
  bad([](SimulationConfig& c) { c.r2_y0x = 0.0; });
  bad([](SimulationConfig& c) { c.reps = 1; });
  bad([](SimulationConfig& c) { c.variance_methods.clear(); });
  bad([](SimulationConfig& c) {
    c.variance_methods = {VarianceMethod::kDb, VarianceMethod::kDb};
  });
  bad([](SimulationConfig& c) {
    c.n = 10;
    c.p = 0.01;
  });
}

TEST(Replications, DeterministicAndOrderIndependent) {
  const SimulationConfig cfg = small_config();
  const PotentialPopulation pop = generate_population(cfg, 0);
  const auto serial = run_replications_serial(pop, cfg, 0, 1.0);
  for (int threads : {1, 3, 8}) {
    const auto par = run_replications(pop, cfg, 0, 1.0, threads);
    ASSERT_EQ(par.size(), serial.size());
    for (std::size_t r = 0; r < serial.size(); ++r) {
      EXPECT_EQ(par[r].ok, serial[r].ok);
      EXPECT_EQ(par[r].tau_late, serial[r].tau_late);
      EXPECT_EQ(par[r].se, serial[r].se);
      EXPECT_EQ(par[r].covered, serial[r].covered);
    }
  }
  const ReplicationRecord one = run_replication(pop, cfg, 0, 17, 1.0);
  EXPECT_EQ(one.tau_late, serial[17].tau_late);
}

TEST(Replications, SummaryArithmetic) {
  SimulationConfig cfg;
  cfg.variance_methods = {VarianceMethod::kDb};
  std::vector<ReplicationRecord> recs(4);
  const double taus[] = {1.0, 2.0, 3.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    recs[i].ok = true;
    recs[i].tau_late = taus[i];
    recs[i].se[0] = 0.5 * (i + 1);
    recs[i].covered[0] = i != 1;
  }
  const DatasetSummary s = summarize_dataset(recs, cfg, 1.5);
  ASSERT_EQ(s.methods.size(), 1u);
  EXPECT_DOUBLE_EQ(s.methods[0].bias, 0.5);
  EXPECT_DOUBLE_EQ(s.methods[0].true_se, 1.0);
  EXPECT_DOUBLE_EQ(s.methods[0].coverage, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.methods[0].mean_est_se, 1.0);
  EXPECT_EQ(s.methods[0].rejected_replications, 1u);
}

TEST(MonteCarlo, ParallelMatchesSerialAndAveragesDatasets) {
  const SimulationConfig cfg = small_config();
  const SimulationSummary a = run_monte_carlo(cfg, 4);
  const SimulationSummary b = run_monte_carlo_serial(cfg);
  ASSERT_EQ(a.datasets.size(), 2u);
  for (std::size_t j = 0; j < a.methods.size(); ++j) {
    EXPECT_EQ(a.methods[j].bias, b.methods[j].bias);
    EXPECT_EQ(a.methods[j].coverage, b.methods[j].coverage);
    EXPECT_EQ(a.methods[j].true_se, b.methods[j].true_se);
    EXPECT_NEAR(a.methods[j].bias,
                0.5 * (a.datasets[0].methods[j].bias + a.datasets[1].methods[j].bias), 1e-15);
  }
  EXPECT_NE(a.datasets[0].checksum, a.datasets[1].checksum);
  EXPECT_EQ(a.n1, 30u);
}

}  // namespace
}  // namespace late
