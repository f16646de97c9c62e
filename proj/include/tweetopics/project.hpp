#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tweetopics/error.hpp"
#include "tweetopics/matrix.hpp"

namespace tweetopics {

// Top-2 principal directions of a point cloud. Variances use the M - 1 divisor.
struct Projection2D {
  MatrixD basis;  // 2 x N, orthonormal rows
  std::vector<double> mean;
  MatrixD coords;  // M x 2, the fitted points projected
  std::array<double, 2> explained_variance{};
};

inline MatrixD transform(const Projection2D& proj, const MatrixD& points) {
  if (points.cols() != proj.mean.size())
    throw DataError("point dimension " + std::to_string(points.cols()) + " does not match projection dimension " +
                    std::to_string(proj.mean.size()));
  MatrixD out(points.rows(), 2);
  std::vector<double> centered(proj.mean.size());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto p = points.row(i);
    for (std::size_t j = 0; j < centered.size(); ++j) centered[j] = p[j] - proj.mean[j];
    out(i, 0) = dot(centered, proj.basis.row(0));
    out(i, 1) = dot(centered, proj.basis.row(1));
  }
  return out;
}

// Eigen-decomposition of the covariance matrix. Each basis vector is signed so
// that its largest-magnitude component (first one on ties) is positive.
inline Projection2D fit_pca2(const MatrixD& points) {
  const std::size_t m = points.rows();
  const std::size_t n = points.cols();
  if (m < 2) throw DataError("PCA needs at least two points");
  if (n < 2) throw DataError("PCA to two dimensions needs at least two input dimensions");

  Projection2D proj;
  proj.mean.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = points.row(i);
    for (std::size_t j = 0; j < n; ++j) proj.mean[j] += row[j];
  }
  for (auto& v : proj.mean) v /= static_cast<double>(m);

  Eigen::MatrixXd x(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = points(i, j) - proj.mean[j];
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(m - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DataError("PCA eigen-decomposition failed");

  // Eigenvalues come back in increasing order.
  proj.basis = MatrixD(2, n);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto col = static_cast<Eigen::Index>(n - 1 - c);
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    Eigen::Index big = 0;
    for (Eigen::Index j = 1; j < v.size(); ++j)
      if (std::abs(v(j)) > std::abs(v(big))) big = j;
    if (v(big) < 0) v = -v;
    for (std::size_t j = 0; j < n; ++j) proj.basis(c, j) = v(static_cast<Eigen::Index>(j));
    proj.explained_variance[c] = std::max(0.0, solver.eigenvalues()(col));
  }
  proj.coords = transform(proj, points);
  return proj;
}

}  // namespace tweetopics
