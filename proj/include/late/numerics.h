#ifndef LATE_NUMERICS_H_
#define LATE_NUMERICS_H_

#include <cstddef>
#include <span>
#include <vector>

namespace late {

// Dense row-major matrix. Used for design matrices and covariate blocks;
// rows are observations.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const;

  // Rows selected by index, in the given order.
  Matrix select_rows(std::span<const std::size_t> indices) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Relative pivot tolerance for the rank check of the normal equations.
inline constexpr double kRankTolerance = 1e-10;

// Least-squares coefficients minimizing ||response - design * b||^2.
// Solved through the column-equilibrated normal equations with a Cholesky
// factorization. Throws LateError(kRankDeficient) when the smallest pivot
// falls below kRankTolerance times the largest, and kDomainError on shape
// mismatch, n < k, or non-finite entries.
std::vector<double> solve_least_squares(const Matrix& design,
                                        std::span<const double> response);

// Weighted variant: minimizes sum_i w_i (response_i - design_i * b)^2.
// All weights must be positive.
std::vector<double> solve_weighted_least_squares(const Matrix& design,
                                                 std::span<const double> response,
                                                 std::span<const double> weights);

// Standard normal CDF.
double normal_cdf(double z);

// Inverse of normal_cdf. p = 0 gives -inf and p = 1 gives +inf; p outside
// [0, 1] (or NaN) throws kDomainError.
double normal_quantile(double p);

// Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0, 1].
double regularized_incomplete_beta(double x, double a, double b);

// Student t CDF with df > 0 (fractional df allowed).
double student_t_cdf(double t, double df);

// Inverse of student_t_cdf for p in (0, 1).
double student_t_quantile(double p, double df);

}  // namespace late

#endif  // LATE_NUMERICS_H_
