#include <gtest/gtest.h>

#include <cmath>

#include "late/blocked.h"
#include "late/error.h"
#include "test_support.h"

namespace late {
namespace {

using testing::Gen;
using testing::random_dataset;
using testing::rel_err;
using testing::stack_blocks;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const LateError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a LateError";
  return ErrorCode::kIoError;
}

bool has_warning(const std::vector<std::string>& w, std::string_view label) {
  for (const auto& s : w) {
    if (s == label) return true;
  }
  return false;
}

BlockedOptions db_only(BlockWeightScheme scheme = BlockWeightScheme::kComplierSize) {
  BlockedOptions o;
  o.estimate.methods = {VarianceMethod::kDb, VarianceMethod::kDbBounded};
  o.scheme = scheme;
  return o;
}

TEST(Blocked, SingleBlockEqualsSimpleDesign) {
  Gen g(31);
  for (std::size_t v : {0u, 1u, 3u}) {
    Dataset data = random_dataset(g, 40, v, 0.4);
    data.block_id = std::vector<std::string>(data.n(), "only");
    const PooledResult pooled = analyze_blocked(data, db_only());
    const LateResult simple = analyze_simple(data);
    EXPECT_LE(rel_err(pooled.tau_late, simple.tau_late), 1e-10);
    EXPECT_LE(rel_err(pooled.var_pooled, simple.methods.at(VarianceMethod::kDb).variance),
              1e-10);
    EXPECT_LE(rel_err(pooled.var_pooled_bounded,
                      simple.methods.at(VarianceMethod::kDbBounded).variance),
              1e-10);
    EXPECT_EQ(pooled.df, simple.df);
    EXPECT_LE(rel_err(pooled.methods.at(VarianceMethod::kDb).inference.ci_lower,
                      simple.methods.at(VarianceMethod::kDb).inference.ci_lower),
              1e-10);
  }
}

TEST(Blocked, TwoIdenticalBlocksPoolToTheCommonEstimate) {
  Gen g(32);
  const Dataset part = random_dataset(g, 30, 2);
  const Dataset data = stack_blocks({part, part}, {"a", "b"});
  const PooledResult r = analyze_blocked(data, db_only());
  ASSERT_EQ(r.per_block.size(), 2u);
  EXPECT_LE(rel_err(r.per_block[0].tau_late, r.per_block[1].tau_late), 1e-12);
  EXPECT_LE(rel_err(r.tau_late, r.per_block[0].tau_late), 1e-12);
  EXPECT_LE(rel_err(r.tau_late, estimate_late(part).tau_late), 1e-10);
  EXPECT_LE(rel_err(r.var_pooled, r.per_block[0].var_qbar / 2.0), 1e-12);
}

// Without covariates each block is its own simple experiment.
TEST(Blocked, NoCovariateBlocksMatchPerBlockSimpleFits) {
  Gen g(33);
  const std::vector<Dataset> parts = {random_dataset(g, 20, 0, 0.5),
                                      random_dataset(g, 31, 0, 0.3),
                                      random_dataset(g, 17, 0, 0.6)};
  const Dataset data = stack_blocks(parts, {"b2", "b0", "b1"});
  const PooledResult r = analyze_blocked(data, db_only());
  // Labels come back sorted.
  ASSERT_EQ(r.per_block.size(), 3u);
  EXPECT_EQ(r.per_block[0].label, "b0");
  const std::vector<std::size_t> part_of = {1, 2, 0};
  double wsum = 0.0, tau = 0.0, var = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    const Dataset& part = parts[part_of[b]];
    const LateResult s = analyze_simple(part);
    EXPECT_LE(rel_err(r.per_block[b].tau_late, s.tau_late), 1e-12);
    EXPECT_LE(rel_err(r.per_block[b].var_qbar, s.methods.at(VarianceMethod::kDb).variance),
              1e-12);
    const double w = static_cast<double>(part.n()) * s.pi_itt;
    EXPECT_LE(rel_err(r.per_block[b].weight, w), 1e-12);
    wsum += w;
    tau += w * s.tau_late;
    var += w * w * s.methods.at(VarianceMethod::kDb).variance;
  }
  EXPECT_LE(rel_err(r.tau_late, tau / wsum), 1e-12);
  EXPECT_LE(rel_err(r.var_pooled, var / (wsum * wsum)), 1e-12);
  EXPECT_EQ(r.df, static_cast<double>(data.n()) - 0.0 - 6.0);
}

// Joint-model block effects against a long double solve of the same design.
TEST(BlockedProperty, JointModelMatchesGaussOracle) {
  Gen g(34);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t v = 1 + g.index(2);
    const std::size_t h = 2 + g.index(3);
    std::vector<Dataset> parts;
    std::vector<std::string> labels;
    for (std::size_t b = 0; b < h; ++b) {
      parts.push_back(random_dataset(g, 14 + g.index(20), v, g.uniform(0.3, 0.7)));
      labels.push_back("blk" + std::to_string(b));
    }
    const Dataset data = stack_blocks(parts, labels);
    const BlockEstimates est = estimate_blocks(data);

    const std::size_t k = 2 * h + v;
    std::vector<std::vector<long double>> a(k, std::vector<long double>(k, 0.0L));
    std::vector<long double> by(k, 0.0L), bd(k, 0.0L);
    std::size_t row = 0;
    for (std::size_t b = 0; b < h; ++b) {
      const Dataset& p = parts[b];
      const long double pb = static_cast<long double>(p.treated_count()) / p.n();
      std::vector<long double> xbar(v, 0.0L);
      for (std::size_t i = 0; i < p.n(); ++i) {
        for (std::size_t c = 0; c < v; ++c) xbar[c] += p.x(i, c) / p.n();
      }
      for (std::size_t i = 0; i < p.n(); ++i, ++row) {
        std::vector<long double> z(k, 0.0L);
        z[b] = 1.0L;
        z[h + b] = p.t[i] - pb;
        for (std::size_t c = 0; c < v; ++c) z[2 * h + c] = p.x(i, c) - xbar[c];
        for (std::size_t r = 0; r < k; ++r) {
          for (std::size_t c = 0; c < k; ++c) a[r][c] += z[r] * z[c];
          by[r] += z[r] * p.y[i];
          bd[r] += z[r] * p.d[i];
        }
      }
    }
    const auto cy = testing::gauss_solve(a, by);
    const auto cd = testing::gauss_solve(a, bd);
    for (std::size_t b = 0; b < h; ++b) {
      EXPECT_LE(rel_err(est.blocks[b].tau_itt, static_cast<double>(cy[h + b])), 1e-9);
      EXPECT_LE(rel_err(est.blocks[b].pi_itt, static_cast<double>(cd[h + b])), 1e-9);
    }
  }
}

TEST(BlockedProperty, PooledVarianceFormulaAndWeightSchemes) {
  Gen g(35);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Dataset> parts;
    std::vector<std::string> labels;
    const std::size_t h = 2 + g.index(4);
    for (std::size_t b = 0; b < h; ++b) {
      parts.push_back(random_dataset(g, 12 + g.index(30), 1));
      labels.push_back(std::string(1, static_cast<char>('a' + b)));
    }
    const Dataset data = stack_blocks(parts, labels);
    for (auto scheme : {BlockWeightScheme::kComplierSize, BlockWeightScheme::kBlockSize,
                        BlockWeightScheme::kUniform}) {
      const PooledResult r = analyze_blocked(data, db_only(scheme));
      double wsum = 0, tau = 0, var = 0;
      for (const BlockResult& b : r.per_block) {
        double w = 1.0;
        if (scheme == BlockWeightScheme::kBlockSize) w = static_cast<double>(b.n);
        if (scheme == BlockWeightScheme::kComplierSize) {
          w = std::max(0.0, static_cast<double>(b.n) * b.pi_itt);
        }
        EXPECT_DOUBLE_EQ(b.weight, w);
        wsum += w;
        tau += w * b.tau_late;
        var += w * w * b.var_qbar;
      }
      EXPECT_LE(rel_err(r.tau_late, tau / wsum), 1e-12);
      EXPECT_LE(rel_err(r.var_pooled, var / (wsum * wsum)), 1e-12);
      EXPECT_EQ(r.df, static_cast<double>(data.n()) - 1.0 - 2.0 * static_cast<double>(h));
    }
  }
}

TEST(Blocked, DegenerateBlockPolicy) {
  Gen g(36);
  Dataset bad = random_dataset(g, 6, 0);
  bad.t.assign(6, 1);
  const Dataset data = stack_blocks({random_dataset(g, 20, 0), bad}, {"good", "bad"});
  EXPECT_EQ(code_of([&] { analyze_blocked(data, db_only()); }), ErrorCode::kDegenerateArm);

  BlockedOptions drop = db_only();
  drop.policy = BlockPolicy::kDrop;
  const PooledResult r = analyze_blocked(data, drop);
  ASSERT_EQ(r.per_block.size(), 1u);
  EXPECT_EQ(r.per_block[0].label, "good");
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0].label, "bad");
  EXPECT_TRUE(has_warning(r.warnings, kWarnDroppedBlock));
  EXPECT_EQ(r.df, 20.0 - 2.0);
}

TEST(Blocked, ZeroComplianceBlockDroppedOrFatal) {
  Gen g(37);
  Dataset flat = random_dataset(g, 10, 0);
  flat.d.assign(10, 1.0);
  const Dataset data = stack_blocks({random_dataset(g, 20, 0), flat}, {"a", "z"});
  EXPECT_EQ(code_of([&] { analyze_blocked(data, db_only()); }),
            ErrorCode::kZeroComplianceEffect);
  BlockedOptions drop = db_only();
  drop.policy = BlockPolicy::kDrop;
  const PooledResult r = analyze_blocked(data, drop);
  EXPECT_EQ(r.per_block.size(), 1u);
  // The dropped block still occupied the joint model.
  EXPECT_EQ(r.df, 30.0 - 4.0);
}

TEST(Blocked, AllBlocksDropped) {
  Gen g(38);
  Dataset a = random_dataset(g, 6, 0);
  a.t.assign(6, 0);
  Dataset b = random_dataset(g, 6, 0);
  b.t.assign(6, 1);
  const Dataset data = stack_blocks({a, b}, {"a", "b"});
  BlockedOptions drop = db_only();
  drop.policy = BlockPolicy::kDrop;
  // Validation of the whole dataset passes (both arms present overall).
  EXPECT_EQ(code_of([&] { analyze_blocked(data, drop); }), ErrorCode::kAllBlocksDropped);
}

TEST(Blocked, NegativeComplierWeightIsFloored) {
  Gen g(39);
  Dataset reversed = random_dataset(g, 30, 0);
  for (std::size_t i = 0; i < reversed.n(); ++i) reversed.d[i] = reversed.t[i] ? 0.0 : 1.0;
  reversed.d[0] = 1.0 - reversed.d[0];
  const Dataset data = stack_blocks({random_dataset(g, 30, 0), reversed}, {"a", "b"});
  const PooledResult r = analyze_blocked(data, db_only());
  EXPECT_TRUE(has_warning(r.warnings, kWarnNegativeWeight));
  EXPECT_TRUE(has_warning(r.warnings, kWarnNegativeCompliance));
  EXPECT_EQ(r.per_block[1].weight, 0.0);
  EXPECT_DOUBLE_EQ(r.tau_late, r.per_block[0].tau_late);
}

TEST(Blocked, IvRequestWarnsAndIsSkipped) {
  Gen g(40);
  const Dataset data =
      stack_blocks({random_dataset(g, 20, 0), random_dataset(g, 20, 0)}, {"a", "b"});
  const PooledResult r = analyze_blocked(data);
  EXPECT_TRUE(has_warning(r.warnings, kWarnIvUnavailable));
  EXPECT_EQ(r.methods.count(VarianceMethod::kIv), 0u);
  EXPECT_EQ(r.methods.count(VarianceMethod::kDb), 1u);
}

TEST(Blocked, MissingBlockColumn) {
  Gen g(41);
  EXPECT_EQ(code_of([&] { analyze_blocked(random_dataset(g, 10, 0)); }),
            ErrorCode::kInvalidConfig);
}

TEST(Blocked, SchemeNamesRoundTrip) {
  for (auto s : {BlockWeightScheme::kComplierSize, BlockWeightScheme::kBlockSize,
                 BlockWeightScheme::kUniform}) {
    EXPECT_EQ(parse_block_weight_scheme(block_weight_scheme_name(s)), s);
  }
  EXPECT_EQ(parse_block_policy("drop"), BlockPolicy::kDrop);
  EXPECT_EQ(code_of([] { parse_block_policy("skip"); }), ErrorCode::kInvalidConfig);
}

}  // namespace
}  // namespace late
