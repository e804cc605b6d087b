// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Point-cloud fidelity metrics: point-to-point PSNR, point-to-plane PSNR
// with neighborhood-fit normals, and the Chamfer distance.

#ifndef LPCM_METRICS_HPP_
#define LPCM_METRICS_HPP_

#include <cstddef>

#include "lpcm/geometry.hpp"

namespace lpcm {

// Diagonal of the axis-aligned bounding box; the default PSNR peak.
double bounding_box_diagonal(const PointCloud& cloud);

// Symmetric point-to-point PSNR in dB: the larger directional mean squared
// nearest-neighbor error of the two directions, put under peak^2. Identical
// clouds give +infinity. Throws InvalidInputError on empty clouds or
// peak <= 0.
double d1_psnr(const PointCloud& reference, const PointCloud& test, double peak_m,
               unsigned threads = 1);

// Symmetric point-to-plane PSNR in dB: squared errors are projections onto
// the reference points' normals, estimated from a least-squares plane fit
// over normal_k reference-cloud neighbors (unit z on rank-deficient
// neighborhoods). Throws InvalidInputError when the reference has fewer
// than normal_k points.
double d2_psnr(const PointCloud& reference, const PointCloud& test, double peak_m,
               std::size_t normal_k = 9, unsigned threads = 1);

// Sum of the two directional mean squared nearest-neighbor distances, in
// square meters. Symmetric by construction.
double chamfer_distance(const PointCloud& a, const PointCloud& b,
                        unsigned threads = 1);

}  // namespace lpcm

#endif  // LPCM_METRICS_HPP_
