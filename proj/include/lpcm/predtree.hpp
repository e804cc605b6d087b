// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Partitioning of a scan into per-laser predictive chains, either from
// scanner calibration or by azimuth-jump threshold segmentation.

#ifndef LPCM_PREDTREE_HPP_
#define LPCM_PREDTREE_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include "lpcm/geometry.hpp"

namespace lpcm {

// One laser's chain of points, ordered for closed-loop prediction.
// origin_order maps chain positions back to input-cloud indices.
struct PredictiveTree {
  int laser_id = 0;
  std::vector<SphericalPoint> points;
  std::vector<std::size_t> origin_order;
};

enum class TreeMethod { kCalibrated, kThreshold };

// The full partition of a scan. Every input point lives in exactly one
// tree. Calibrated sets carry the calibration so trees can be mapped back
// to Cartesian space.
struct TreeSet {
  std::vector<PredictiveTree> trees;
  TreeMethod method = TreeMethod::kThreshold;
  double threshold_deg = 180.0;
  std::optional<LaserCalibration> calib;

  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& tree : trees) n += tree.points.size();
    return n;
  }
};

// Groups points by calibration-assigned laser and sorts each group by
// azimuth (stable; input order breaks ties). Empty lasers are omitted.
TreeSet build_trees_calibrated(const PointCloud& cloud,
                               const LaserCalibration& calib);

// Segments an acquisition-ordered scan into rings: a new chain starts
// whenever the absolute azimuth step reaches `threshold_deg`. The raw
// difference is used by default; `wraparound` switches to the circular
// difference min(raw, 360 - raw). Within a chain, acquisition order is
// kept. Throws ConfigError unless threshold_deg > 0.
TreeSet build_trees_threshold(const PointCloud& cloud, double threshold_deg = 180.0,
                              bool wraparound = false);

// Inverse of the builders: Cartesian cloud in original input order.
PointCloud flatten(const TreeSet& set);

}  // namespace lpcm

#endif  // LPCM_PREDTREE_HPP_
