// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpcm/metrics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "lpcm/detail/kdtree.hpp"
#include "lpcm/detail/parallel.hpp"
#include "lpcm/errors.hpp"

namespace lpcm {

namespace {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

// Mean squared nearest-neighbor distance from each query point into the
// target tree. Per-point values land in a preallocated buffer and are
// summed serially so the result does not depend on the thread count.
double directional_mse(const PointCloud& queries, const detail::KdTree& target,
                       unsigned threads) {
  std::vector<double> sq(queries.size());
  detail::parallel_for(queries.size(), threads, [&](std::size_t i) {
    sq[i] = target.nearest_squared_distance(queries[i]);
  });
  double sum = 0.0;
  for (double v : sq) sum += v;
  return sum / static_cast<double>(queries.size());
}

double mse_to_psnr(double mse, double peak) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

// Unit normal of the least-squares plane through `k` nearest reference
// neighbors. Falls back to unit z when the neighborhood does not span a
// plane (rank < 2 covariance).
std::vector<Vec3> estimate_normals(const PointCloud& cloud,
                                   const detail::KdTree& tree, std::size_t k,
                                   unsigned threads) {
  std::vector<Vec3> normals(cloud.size());
  detail::parallel_for(cloud.size(), threads, [&](std::size_t i) {
    std::vector<std::size_t> nb = tree.nearest_k(cloud[i], k);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (std::size_t idx : nb) {
      mean += Eigen::Vector3d(cloud[idx].x, cloud[idx].y, cloud[idx].z);
    }
    mean /= static_cast<double>(nb.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t idx : nb) {
      Eigen::Vector3d d =
          Eigen::Vector3d(cloud[idx].x, cloud[idx].y, cloud[idx].z) - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    Eigen::Vector3d evals = solver.eigenvalues();  // ascending
    // rank < 2: the mid eigenvalue vanishes relative to the spread.
    if (evals(2) <= 0.0 || evals(1) <= 1e-12 * evals(2)) {
      normals[i] = {0.0, 0.0, 1.0};
    } else {
      Eigen::Vector3d n = solver.eigenvectors().col(0);
      normals[i] = {n(0), n(1), n(2)};
    }
  });
  return normals;
}

}  // namespace

double bounding_box_diagonal(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidInputError("empty point cloud");
  CartesianPoint lo = cloud.front();
  CartesianPoint hi = cloud.front();
  for (const CartesianPoint& p : cloud) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    lo.z = std::min(lo.z, p.z);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
    hi.z = std::max(hi.z, p.z);
  }
  double dx = hi.x - lo.x;
  double dy = hi.y - lo.y;
  double dz = hi.z - lo.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double d1_psnr(const PointCloud& reference, const PointCloud& test, double peak_m,
               unsigned threads) {
  if (reference.empty() || test.empty()) throw InvalidInputError("empty point cloud");
  if (peak_m <= 0.0) throw InvalidInputError("peak must be positive");
  detail::KdTree ref_tree(reference);
  detail::KdTree test_tree(test);
  double forward = directional_mse(reference, test_tree, threads);
  double backward = directional_mse(test, ref_tree, threads);
  return mse_to_psnr(std::max(forward, backward), peak_m);
}

double d2_psnr(const PointCloud& reference, const PointCloud& test, double peak_m,
               std::size_t normal_k, unsigned threads) {
  if (reference.empty() || test.empty()) throw InvalidInputError("empty point cloud");
  if (peak_m <= 0.0) throw InvalidInputError("peak must be positive");
  if (normal_k < 3) throw InvalidInputError("normal_k must be at least 3");
  if (reference.size() < normal_k) {
    throw InvalidInputError("reference smaller than the normal neighborhood");
  }
  detail::KdTree ref_tree(reference);
  detail::KdTree test_tree(test);
  std::vector<Vec3> normals = estimate_normals(reference, ref_tree, normal_k, threads);

  // reference -> test: project each reference point's error onto its own
  // normal; test -> reference: onto the matched reference point's normal.
  std::vector<double> sq(reference.size());
  detail::parallel_for(reference.size(), threads, [&](std::size_t i) {
    std::size_t j = test_tree.nearest(reference[i]);
    double ex = test[j].x - reference[i].x;
    double ey = test[j].y - reference[i].y;
    double ez = test[j].z - reference[i].z;
    double proj = ex * normals[i].x + ey * normals[i].y + ez * normals[i].z;
    sq[i] = proj * proj;
  });
  double forward = 0.0;
  for (double v : sq) forward += v;
  forward /= static_cast<double>(reference.size());

  sq.assign(test.size(), 0.0);
  detail::parallel_for(test.size(), threads, [&](std::size_t i) {
    std::size_t j = ref_tree.nearest(test[i]);
    double ex = test[i].x - reference[j].x;
    double ey = test[i].y - reference[j].y;
    double ez = test[i].z - reference[j].z;
    double proj = ex * normals[j].x + ey * normals[j].y + ez * normals[j].z;
    sq[i] = proj * proj;
  });
  double backward = 0.0;
  for (double v : sq) backward += v;
  backward /= static_cast<double>(test.size());

  return mse_to_psnr(std::max(forward, backward), peak_m);
}

double chamfer_distance(const PointCloud& a, const PointCloud& b, unsigned threads) {
  if (a.empty() || b.empty()) throw InvalidInputError("empty point cloud");
  detail::KdTree tree_a(a);
  detail::KdTree tree_b(b);
  return directional_mse(a, tree_b, threads) + directional_mse(b, tree_a, threads);
}

}  // namespace lpcm
