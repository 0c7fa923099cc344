#include <cmath>

#include <Eigen/Dense>

#include "psychoforge/error.hpp"
#include "psychoforge/stats.hpp"

namespace psychoforge::stats {

ProjectionResult pca_project(const DesignMatrix& data, std::size_t k) {
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  if (k == 0) fail(ErrorCode::InvalidArgument, "pca_project: k must be positive");
  if (k > n || k > p) {
    fail(ErrorCode::ComponentsTooMany, "pca_project: k=" + std::to_string(k) + " exceeds min(n=" +
                                           std::to_string(n) + ", p=" + std::to_string(p) + ")");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    if (data.rows[i].size() != p) fail(ErrorCode::DimensionMismatch, "pca_project: ragged data");
    for (std::size_t j = 0; j < p; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data.rows[i][j];
  }
  const Eigen::RowVectorXd mu = m.colwise().mean();
  m.rowwise() -= mu;
  const double total = m.squaredNorm();
  if (total == 0.0) fail(ErrorCode::DegenerateData, "pca_project: all rows are equal");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  Eigen::MatrixXd v = svd.matrixV();

  ProjectionResult out;
  for (std::size_t c = 0; c < k; ++c) {
    const auto cc = static_cast<Eigen::Index>(c);
    Eigen::VectorXd dir = v.col(cc);
    // Sign convention: the largest-magnitude loading is positive.
    Eigen::Index arg = 0;
    dir.cwiseAbs().maxCoeff(&arg);
    if (dir(arg) < 0) dir = -dir;
    out.components.emplace_back(dir.data(), dir.data() + dir.size());
    out.explained_variance_ratio.push_back(sv(cc) * sv(cc) / total);
    v.col(cc) = dir;
  }
  const Eigen::MatrixXd proj = m * v.leftCols(static_cast<Eigen::Index>(k));
  out.projected.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      out.projected[i].push_back(proj(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    }
  }
  return out;
}

}  // namespace psychoforge::stats
