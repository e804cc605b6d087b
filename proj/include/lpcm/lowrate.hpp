// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Low-bitrate coding mode: azimuths and elevations ride the same machinery
// as the high-rate mode (elevations always against the previous-point
// rule), while radii are gathered laser-by-laser into 256x256 matrices and
// coded by row-predictive uniform quantization with Laplace-seeded entropy
// contexts. The matrix interface (matrices in, stream + reconstructions
// out) leaves room for a learned back-end later; the rate/distortion
// calculus matches the evaluation formulas either way.

#ifndef LPCM_LOWRATE_HPP_
#define LPCM_LOWRATE_HPP_

#include <cstdint>
#include <vector>

#include "lpcm/entropy.hpp"
#include "lpcm/highrate.hpp"
#include "lpcm/predtree.hpp"

namespace lpcm {

inline constexpr int kMatrixDim = 256;
inline constexpr std::size_t kMatrixCells =
    static_cast<std::size_t>(kMatrixDim) * kMatrixDim;

// One row-major 256x256 chunk of the radius arrangement. Only the first
// `fill` cells are real; the tail stays zero and is excluded from
// distortion.
struct RadiusMatrix {
  std::vector<double> values;  // kMatrixCells entries
  std::size_t fill = 0;
};

// Matrices plus the provenance needed to invert the arrangement: the chain
// lengths in concatenation order.
struct RadiusArrangement {
  std::vector<RadiusMatrix> matrices;
  std::vector<std::size_t> tree_sizes;
};

// Concatenates every tree's radii in tree order and chunks them row-major;
// the last matrix is zero-padded.
RadiusArrangement arrange_radius_matrices(const TreeSet& set);

// Inverse: per-tree radius sequences, in tree order. Throws
// InvalidInputError when sizes and fills disagree.
std::vector<std::vector<double>> split_radius_sequences(
    const std::vector<RadiusMatrix>& matrices,
    const std::vector<std::size_t>& tree_sizes);

// Rate/distortion knobs of the radius coder.
struct RdConfig {
  double lambda = 0.6;  // RD trade-off weight, from {0.6, 2.2}
  double step = 0.1;    // quantization step, meters
};

// Prediction residuals of one matrix in the quantized integer domain: the
// corner cell raw, the rest of row 0 predicted horizontally, every later
// row predicted from the reconstructed row above. Exactly the symbols the
// coder entropy-codes, so the rate model can share them.
std::vector<std::int32_t> matrix_residuals(const RadiusMatrix& m, double step);

// One coded matrix: the residual stream plus the Laplace side parameters
// that seed the decoder's contexts.
struct MatrixPayload {
  std::uint32_t fill = 0;
  std::int32_t center = 0;  // integer location subtracted before coding
  double scale = 1e-6;      // fitted Laplace b, in step units
  std::vector<std::uint8_t> data;
};

struct LowRadiusResult {
  std::vector<MatrixPayload> payloads;
  std::vector<RadiusMatrix> reconstructed;
};

// Filled cells quantized to step-sized bins (round half away from zero) and
// residual-coded; every filled cell reconstructs within step/2. Matrices
// are independent and may be coded in parallel.
LowRadiusResult encode_radius_lowrate(const std::vector<RadiusMatrix>& matrices,
                                      const RdConfig& cfg, int threads = 1);
std::vector<RadiusMatrix> decode_radius_lowrate(
    const std::vector<MatrixPayload>& payloads, double step, int threads = 1);

// Model-estimated bits per residual under a Laplace fit (unit bins), with
// `side_bits` of header cost amortized over the sequence.
double rate_estimate(const std::vector<std::int32_t>& residuals,
                     const LaplaceParams& params, double side_bits = 0.0);

// Mean squared radius error over filled cells, meters^2.
double matrix_distortion(const RadiusMatrix& a, const RadiusMatrix& b);

// The scalarized objective R + lambda * D.
double rd_loss(double rate_bits_per_point, double distortion, double lambda);

// --- Whole-cloud pipeline ------------------------------------------------

struct LowRateConfig {
  QpVector qp;            // q_r is unused by this mode
  double phi_ar = 0.2;    // native azimuth resolution, degrees
  bool skip_bias = true;
  RdConfig rd;
  int threads = 1;
};

// Tree records reuse the high-rate payload with an empty radius stream;
// radii live in the matrix section. The stored per-tree root radius is the
// matrix-reconstructed one (the decoder-visible value).
struct LowRateEncoding {
  std::vector<TreePayload> trees;
  std::vector<MatrixPayload> matrices;
  double step = 0.1;
};

LowRateEncoding encode_cloud_low(const TreeSet& set, const LowRateConfig& cfg);

// Reconstructed spherical points concatenated in payload order, bit-exactly
// equal to the encoder's reconstructions.
std::vector<SphericalPoint> decode_cloud_low(const LowRateEncoding& encoding,
                                             const LowRateConfig& cfg);

}  // namespace lpcm

#endif  // LPCM_LOWRATE_HPP_
