#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "psychoforge/error.hpp"
#include "psychoforge/stats.hpp"

namespace psychoforge::stats {

namespace {
constexpr double kRankThreshold = 1e-10;
}

RegressionFit ols_fit(const DesignMatrix& x, const SampleVector& y) {
  const std::size_t n = x.n();
  const std::size_t p = x.p();
  if (n != y.values.size()) {
    fail(ErrorCode::DimensionMismatch,
         "ols_fit: " + std::to_string(n) + " rows but " + std::to_string(y.values.size()) + " responses");
  }
  if (p == 0 && !x.intercept_included) fail(ErrorCode::DimensionMismatch, "ols_fit: no predictors");
  for (const auto& row : x.rows) {
    if (row.size() != p) fail(ErrorCode::DimensionMismatch, "ols_fit: ragged design matrix");
  }
  if (n <= p + 1) {
    fail(ErrorCode::TooFewObservations,
         "ols_fit: need n > p + 1 (n=" + std::to_string(n) + ", p=" + std::to_string(p) + ")");
  }

  const std::size_t cols = p + (x.intercept_included ? 1 : 0);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    Eigen::Index c = 0;
    if (x.intercept_included) a(ii, c++) = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (!std::isfinite(x.rows[i][j])) fail(ErrorCode::NonFinite, "ols_fit: non-finite predictor");
      a(ii, c++) = x.rows[i][j];
    }
    if (!std::isfinite(y.values[i])) fail(ErrorCode::NonFinite, "ols_fit: non-finite response");
    b(ii) = y.values[i];
  }

  const double ybar = b.mean();
  const double ss_tot = (b.array() - ybar).square().sum();
  const bool constant = std::all_of(y.values.begin(), y.values.end(), [&](double v) { return v == y.values.front(); });
  if (ss_tot == 0.0 || constant) fail(ErrorCode::ZeroTotalVariance, "ols_fit: response '" + y.label + "' is constant");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < static_cast<Eigen::Index>(cols)) {
    fail(ErrorCode::RankDeficient, "ols_fit: design matrix rank " + std::to_string(qr.rank()) + " < " +
                                       std::to_string(cols));
  }
  const Eigen::VectorXd beta = qr.solve(b);
  const Eigen::VectorXd resid = b - a * beta;

  RegressionFit fit;
  fit.n = n;
  fit.p = p;
  Eigen::Index c = 0;
  if (x.intercept_included) fit.intercept = beta(c++);
  for (std::size_t j = 0; j < p; ++j) fit.coefficients.push_back(beta(c++));
  fit.residuals.assign(resid.data(), resid.data() + resid.size());
  const double ss_res = resid.squaredNorm();
  fit.r_squared = 1.0 - ss_res / ss_tot;
  fit.adj_r_squared = adjusted_r_squared(fit.r_squared, n, p);
  return fit;
}

}  // namespace psychoforge::stats
