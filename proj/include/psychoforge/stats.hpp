#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace psychoforge::stats {

struct SampleVector {
  std::vector<double> values;
  std::string label;
};

/// Row-major n x p predictor matrix. The intercept column is implicit and
/// controlled by `intercept_included`.
struct DesignMatrix {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> column_names;
  bool intercept_included = true;

  [[nodiscard]] std::size_t n() const noexcept { return rows.size(); }
  [[nodiscard]] std::size_t p() const noexcept { return rows.empty() ? column_names.size() : rows.front().size(); }
};

struct RegressionFit {
  std::vector<double> coefficients;  // one per predictor column
  double intercept = 0.0;
  double r_squared = 0.0;
  double adj_r_squared = 0.0;
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> residuals;
};

struct ProjectionResult {
  std::vector<std::vector<double>> components;  // k x p, orthonormal
  std::vector<std::vector<double>> projected;   // n x k
  std::vector<double> explained_variance_ratio;  // descending
};

[[nodiscard]] double mean(const std::vector<double>& v);
/// Population standard deviation (divisor n).
[[nodiscard]] double population_sd(const std::vector<double>& v);
/// Linear-interpolated quantile, q in [0,1].
[[nodiscard]] double quantile(std::vector<double> v, double q);

[[nodiscard]] double pearson_r(const SampleVector& x, const SampleVector& y);
/// `b` must hold only 0 and 1.
[[nodiscard]] double point_biserial(const SampleVector& b, const SampleVector& y);

/// 1 - (1 - r2)(n - 1)/(n - p - 1).
[[nodiscard]] double adjusted_r_squared(double r_squared, std::size_t n, std::size_t p);

[[nodiscard]] RegressionFit ols_fit(const DesignMatrix& x, const SampleVector& y);

[[nodiscard]] ProjectionResult pca_project(const DesignMatrix& data, std::size_t k);

}  // namespace psychoforge::stats
