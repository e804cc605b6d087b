// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpcm/predtree.hpp"

#include <algorithm>
#include <cmath>

#include "lpcm/errors.hpp"

namespace lpcm {

TreeSet build_trees_calibrated(const PointCloud& cloud,
                               const LaserCalibration& calib) {
  TreeSet set;
  set.method = TreeMethod::kCalibrated;
  set.calib = calib;

  std::vector<std::vector<std::size_t>> by_laser(calib.laser_count());
  std::vector<SphericalPoint> spherical(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    spherical[i] = cartesian_to_spherical(cloud[i], &calib);
    by_laser[static_cast<std::size_t>(spherical[i].laser_id)].push_back(i);
  }
  for (std::size_t laser = 0; laser < by_laser.size(); ++laser) {
    auto& order = by_laser[laser];
    if (order.empty()) continue;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return spherical[a].phi < spherical[b].phi;
    });
    PredictiveTree tree;
    tree.laser_id = static_cast<int>(laser);
    tree.points.reserve(order.size());
    tree.origin_order = order;
    for (std::size_t idx : order) tree.points.push_back(spherical[idx]);
    set.trees.push_back(std::move(tree));
  }
  return set;
}

TreeSet build_trees_threshold(const PointCloud& cloud, double threshold_deg,
                              bool wraparound) {
  if (threshold_deg <= 0.0) throw ConfigError("segmentation threshold must be > 0");
  TreeSet set;
  set.method = TreeMethod::kThreshold;
  set.threshold_deg = threshold_deg;
  if (cloud.empty()) return set;

  PredictiveTree current;
  current.laser_id = 0;
  double prev_phi = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    SphericalPoint s = cartesian_to_spherical(cloud[i]);
    if (!current.points.empty()) {
      double diff = std::abs(s.phi - prev_phi);
      if (wraparound) diff = std::min(diff, 360.0 - diff);
      if (diff >= threshold_deg) {
        int next_laser = current.laser_id + 1;
        set.trees.push_back(std::move(current));
        current = PredictiveTree{};
        current.laser_id = next_laser;
      }
    }
    s.laser_id = current.laser_id;
    current.points.push_back(s);
    current.origin_order.push_back(i);
    prev_phi = s.phi;
  }
  set.trees.push_back(std::move(current));
  return set;
}

PointCloud flatten(const TreeSet& set) {
  PointCloud cloud(set.point_count());
  const LaserCalibration* calib = set.calib ? &*set.calib : nullptr;
  for (const PredictiveTree& tree : set.trees) {
    for (std::size_t k = 0; k < tree.points.size(); ++k) {
      cloud[tree.origin_order[k]] = spherical_to_cartesian(tree.points[k], calib);
    }
  }
  return cloud;
}

}  // namespace lpcm
