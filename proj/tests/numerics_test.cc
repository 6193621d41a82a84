#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "late/error.h"
#include "late/numerics.h"
#include "test_support.h"

namespace late {
namespace {

using testing::Gen;

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t r = 0;
  for (const auto& row : rows) {
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const LateError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a LateError";
  return ErrorCode::kIoError;
}

TEST(LeastSquares, ExactLine) {
  const Matrix design = from_rows({{1, 0}, {1, 1}, {1, 2}});
  const std::vector<double> y = {2, 5, 8};
  const auto b = solve_least_squares(design, y);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_NEAR(b[0], 2.0, 1e-12);
  EXPECT_NEAR(b[1], 3.0, 1e-12);
}

TEST(LeastSquares, OrthogonalDesign) {
  const Matrix design = from_rows({{1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {1, -1, -1}});
  const std::vector<double> y = {5, 3, 2, 0};
  const auto b = solve_least_squares(design, y);
  EXPECT_NEAR(b[0], 2.5, 1e-12);
  EXPECT_NEAR(b[1], 1.5, 1e-12);
  EXPECT_NEAR(b[2], 1.0, 1e-12);
}

TEST(LeastSquares, DuplicatedColumnIsRankDeficient) {
  const Matrix design = from_rows({{1, 2, 2}, {1, 3, 3}, {1, 5, 5}, {1, 7, 7}});
  const std::vector<double> y = {1, 2, 3, 4};
  EXPECT_EQ(code_of([&] { solve_least_squares(design, y); }), ErrorCode::kRankDeficient);
}

TEST(LeastSquares, ZeroColumnIsRankDeficient) {
  const Matrix design = from_rows({{1, 0}, {1, 0}, {1, 0}});
  const std::vector<double> y = {1, 2, 3};
  EXPECT_EQ(code_of([&] { solve_least_squares(design, y); }), ErrorCode::kRankDeficient);
}

TEST(LeastSquares, ShapeAndFinitenessErrors) {
  const Matrix wide = from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(code_of([&] { solve_least_squares(wide, std::vector<double>{1, 2}); }),
            ErrorCode::kDomainError);
  const Matrix design = from_rows({{1, 0}, {1, 1}, {1, 2}});
  EXPECT_EQ(code_of([&] { solve_least_squares(design, std::vector<double>{1, 2}); }),
            ErrorCode::kDomainError);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(code_of([&] { solve_least_squares(design, std::vector<double>{1, nan, 2}); }),
            ErrorCode::kDomainError);
}

TEST(LeastSquares, MatchesLongDoubleGaussOracle) {
  Gen g(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 8 + g.index(40);
    const std::size_t k = 1 + g.index(5);
    Matrix design(n, k);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      design(i, 0) = 1.0;
      for (std::size_t c = 1; c < k; ++c) design(i, c) = g.normal() * (1.0 + c);
      y[i] = g.normal() * 3.0;
    }
    std::vector<std::vector<long double>> xtx(k, std::vector<long double>(k, 0.0L));
    std::vector<long double> xty(k, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < k; ++c) xtx[r][c] += design(i, r) * design(i, c);
        xty[r] += design(i, r) * y[i];
      }
    }
    const auto expected = testing::gauss_solve(xtx, xty);
    const auto b = solve_least_squares(design, y);
    for (std::size_t c = 0; c < k; ++c) {
      EXPECT_NEAR(b[c], static_cast<double>(expected[c]), 1e-10);
    }
  }
}

// Residuals are orthogonal to every column; refitting fitted values returns
// the same coefficients.
TEST(LeastSquaresProperty, OrthogonalityAndIdempotence) {
  Gen g(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + g.index(60);
    const std::size_t k = 1 + g.index(std::min<std::size_t>(n - 1, 6));
    Matrix design(n, k);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        design(i, c) = c == 0 ? 1.0 : g.normal() * std::pow(10.0, static_cast<double>(c % 3));
      }
      y[i] = g.normal() * 5.0 + 1.0;
    }
    const auto b = solve_least_squares(design, y);
    std::vector<double> fitted(n), resid(n);
    for (std::size_t i = 0; i < n; ++i) {
      double f = 0.0;
      for (std::size_t c = 0; c < k; ++c) f += design(i, c) * b[c];
      fitted[i] = f;
      resid[i] = y[i] - f;
    }
    for (std::size_t c = 0; c < k; ++c) {
      double dot = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dot += design(i, c) * resid[i];
        scale = std::max(scale, std::fabs(design(i, c)));
      }
      EXPECT_LE(std::fabs(dot), 1e-9 * static_cast<double>(n) * scale);
    }
    const auto refit = solve_least_squares(design, fitted);
    for (std::size_t c = 0; c < k; ++c) {
      EXPECT_NEAR(refit[c], b[c], 1e-12 * std::max(1.0, std::fabs(b[c])));
    }
  }
}

TEST(WeightedLeastSquares, IntegerWeightsEqualRowReplication) {
  const Matrix design = from_rows({{1, 0}, {1, 1}, {1, 3}, {1, 4}});
  const std::vector<double> y = {1, 3, 2, 7};
  const std::vector<double> w = {1, 2, 1, 3};
  const Matrix expanded =
      from_rows({{1, 0}, {1, 1}, {1, 1}, {1, 3}, {1, 4}, {1, 4}, {1, 4}});
  const std::vector<double> ye = {1, 3, 3, 2, 7, 7, 7};
  const auto bw = solve_weighted_least_squares(design, y, w);
  const auto be = solve_least_squares(expanded, ye);
  EXPECT_NEAR(bw[0], be[0], 1e-12);
  EXPECT_NEAR(bw[1], be[1], 1e-12);
}

TEST(WeightedLeastSquares, RejectsNonPositiveWeights) {
  const Matrix design = from_rows({{1, 0}, {1, 1}, {1, 2}});
  const std::vector<double> y = {1, 2, 3};
  EXPECT_EQ(code_of([&] {
              solve_weighted_least_squares(design, y, std::vector<double>{1, 0, 1});
            }),
            ErrorCode::kDomainError);
}

TEST(NormalQuantile, KnownValues) {
  EXPECT_EQ(normal_quantile(0.5), 0.0);
  EXPECT_NEAR(normal_quantile(0.975), 1.959964, 1e-6);
  EXPECT_EQ(normal_quantile(0.25), -normal_quantile(0.75));
  EXPECT_EQ(normal_quantile(0.0), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(normal_quantile(1.0), std::numeric_limits<double>::infinity());
}

TEST(NormalQuantile, DomainErrors) {
  EXPECT_EQ(code_of([] { normal_quantile(-0.1); }), ErrorCode::kDomainError);
  EXPECT_EQ(code_of([] { normal_quantile(1.5); }), ErrorCode::kDomainError);
  EXPECT_EQ(code_of([] { normal_quantile(std::nan("")); }), ErrorCode::kDomainError);
}

TEST(NormalQuantile, AgreesWithBisectionOracle) {
  for (int i = 1; i < 400; ++i) {
    const double p = i / 400.0;
    const double expected = static_cast<double>(testing::normal_quantile_bisect(p));
    EXPECT_NEAR(normal_quantile(p), expected, 1e-9) << "p=" << p;
  }
  for (double p : {1e-10, 1e-8, 3e-5, 0.02425, 0.97575, 1.0 - 1e-8}) {
    const double expected = static_cast<double>(testing::normal_quantile_bisect(p));
    EXPECT_NEAR(normal_quantile(p), expected, 1e-9) << "p=" << p;
  }
}

TEST(NormalQuantileProperty, InvertsCdf) {
  Gen g(3);
  for (int i = 0; i < 2000; ++i) {
    const double p = 1e-10 + (1.0 - 2e-10) * g.uniform();
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-9);
  }
}

TEST(NormalCdf, KnownValuesAndSymmetry) {
  EXPECT_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959964), 0.975, 1e-6);
  Gen g(5);
  for (int i = 0; i < 500; ++i) {
    const double z = g.uniform(-8.0, 8.0);
    EXPECT_NEAR(normal_cdf(z) + normal_cdf(-z), 1.0, 1e-15);
    EXPECT_NEAR(normal_cdf(z), static_cast<double>(testing::normal_cdf_ld(z)), 1e-15);
  }
}

TEST(StudentT, ClosedFormsForSmallDf) {
  // df = 1 is Cauchy; df = 2 has F(t) = 1/2 + t / (2 sqrt(t^2 + 2)).
  for (double t = -30.0; t <= 30.0; t += 0.37) {
    EXPECT_NEAR(student_t_cdf(t, 1.0), 0.5 + std::atan(t) / M_PI, 1e-10) << t;
    EXPECT_NEAR(student_t_cdf(t, 2.0), 0.5 + t / (2.0 * std::sqrt(t * t + 2.0)), 1e-10)
        << t;
  }
}

TEST(StudentT, Df2QuantileMatchesClosedForm) {
  EXPECT_NEAR(student_t_quantile(0.975, 2.0), 4.30265, 1e-4);
  for (double p : {0.01, 0.1, 0.3, 0.6, 0.9, 0.995}) {
    const double expected = (2.0 * p - 1.0) / std::sqrt(2.0 * p * (1.0 - p));
    EXPECT_NEAR(student_t_quantile(p, 2.0), expected, 1e-8 * std::max(1.0, expected));
  }
}

TEST(StudentT, LimitsAndSymmetry) {
  EXPECT_EQ(student_t_cdf(0.0, 3.7), 0.5);
  EXPECT_LE(std::fabs(student_t_cdf(1.0, 1e6) - normal_cdf(1.0)), 1e-5);
  for (double df : {0.5, 1.5, 4.0, 37.25, 398.0}) {
    for (double t : {0.3, 1.7, 5.0}) {
      EXPECT_NEAR(student_t_cdf(t, df) + student_t_cdf(-t, df), 1.0, 1e-14);
    }
    const double q = student_t_quantile(0.975, df);
    EXPECT_NEAR(student_t_cdf(q, df), 0.975, 1e-10);
  }
  EXPECT_EQ(code_of([] { student_t_cdf(1.0, 0.0); }), ErrorCode::kDomainError);
  EXPECT_EQ(code_of([] { student_t_cdf(1.0, -2.0); }), ErrorCode::kDomainError);
}

TEST(IncompleteBeta, SymmetryAndEndpoints) {
  EXPECT_EQ(regularized_incomplete_beta(0.0, 2.0, 3.0), 0.0);
  EXPECT_EQ(regularized_incomplete_beta(1.0, 2.0, 3.0), 1.0);
  // I_x(1, b) = 1 - (1 - x)^b
  for (double x : {0.1, 0.4, 0.9}) {
    EXPECT_NEAR(regularized_incomplete_beta(x, 1.0, 3.5), 1.0 - std::pow(1.0 - x, 3.5),
                1e-13);
    EXPECT_NEAR(regularized_incomplete_beta(x, 2.5, 4.0) +
                    regularized_incomplete_beta(1.0 - x, 4.0, 2.5),
                1.0, 1e-13);
  }
}

}  // namespace
}  // namespace late
