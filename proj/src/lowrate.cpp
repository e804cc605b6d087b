// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpcm/lowrate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lpcm/detail/parallel.hpp"
#include "lpcm/errors.hpp"

namespace lpcm {

namespace {

void validate_rd(const RdConfig& cfg) {
  if (!(cfg.lambda > 0.0)) throw ConfigError("rd lambda must be positive");
  if (!(cfg.step > 0.0)) throw ConfigError("radius step must be positive");
}

std::int32_t quantize_cell(double value, double step) {
  double scaled = value / step;
  if (!(std::abs(scaled) < 2147483646.5)) {
    throw InvalidInputError("radius exceeds the quantizable range at this step");
  }
  return static_cast<std::int32_t>(std::llround(scaled));
}

void check_matrix(const RadiusMatrix& m) {
  if (m.values.size() != kMatrixCells || m.fill > kMatrixCells) {
    throw InvalidInputError("radius matrix must hold 256x256 cells");
  }
}

// Quantized cells of the filled prefix.
std::vector<std::int32_t> quantize_matrix(const RadiusMatrix& m, double step) {
  std::vector<std::int32_t> q(m.fill);
  for (std::size_t k = 0; k < m.fill; ++k) {
    q[k] = quantize_cell(m.values[k], step);
  }
  return q;
}

// Residuals in the integer domain; the prediction uses quantized cells
// only, so encoder and decoder agree exactly and errors cannot accumulate.
std::vector<std::int32_t> residuals_of(const std::vector<std::int32_t>& q) {
  std::vector<std::int32_t> res(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) {
    std::int64_t predicted = 0;
    if (k >= static_cast<std::size_t>(kMatrixDim)) {
      predicted = q[k - kMatrixDim];  // row above
    } else if (k > 0) {
      predicted = q[k - 1];  // first row: left neighbor
    }
    std::int64_t r = static_cast<std::int64_t>(q[k]) - predicted;
    if (r < INT32_MIN || r > INT32_MAX) {
      throw InvalidInputError("radius residual exceeds the symbol range");
    }
    res[k] = static_cast<std::int32_t>(r);
  }
  return res;
}

RadiusMatrix rebuild_matrix(const std::vector<std::int32_t>& q, double step) {
  RadiusMatrix out;
  out.values.assign(kMatrixCells, 0.0);
  out.fill = q.size();
  for (std::size_t k = 0; k < q.size(); ++k) {
    out.values[k] = static_cast<double>(q[k]) * step;
  }
  return out;
}

}  // namespace

RadiusArrangement arrange_radius_matrices(const TreeSet& set) {
  RadiusArrangement out;
  std::size_t total = set.point_count();
  out.tree_sizes.reserve(set.trees.size());
  for (const PredictiveTree& tree : set.trees) {
    out.tree_sizes.push_back(tree.points.size());
  }
  if (total == 0) return out;

  out.matrices.resize((total + kMatrixCells - 1) / kMatrixCells);
  for (RadiusMatrix& m : out.matrices) m.values.assign(kMatrixCells, 0.0);
  std::size_t k = 0;
  for (const PredictiveTree& tree : set.trees) {
    for (const SphericalPoint& p : tree.points) {
      out.matrices[k / kMatrixCells].values[k % kMatrixCells] = p.r;
      ++k;
    }
  }
  for (std::size_t i = 0; i < out.matrices.size(); ++i) {
    out.matrices[i].fill = std::min(kMatrixCells, k - i * kMatrixCells);
  }
  return out;
}

std::vector<std::vector<double>> split_radius_sequences(
    const std::vector<RadiusMatrix>& matrices,
    const std::vector<std::size_t>& tree_sizes) {
  std::size_t filled = 0;
  for (const RadiusMatrix& m : matrices) {
    check_matrix(m);
    filled += m.fill;
  }
  std::size_t expected =
      std::accumulate(tree_sizes.begin(), tree_sizes.end(), std::size_t{0});
  if (filled != expected) {
    throw InvalidInputError("matrix fill does not cover the tree sizes");
  }

  std::vector<std::vector<double>> out(tree_sizes.size());
  std::size_t k = 0;
  for (std::size_t t = 0; t < tree_sizes.size(); ++t) {
    out[t].reserve(tree_sizes[t]);
    for (std::size_t i = 0; i < tree_sizes[t]; ++i, ++k) {
      out[t].push_back(matrices[k / kMatrixCells].values[k % kMatrixCells]);
    }
  }
  return out;
}

std::vector<std::int32_t> matrix_residuals(const RadiusMatrix& m, double step) {
  check_matrix(m);
  if (!(step > 0.0)) throw ConfigError("radius step must be positive");
  return residuals_of(quantize_matrix(m, step));
}

LowRadiusResult encode_radius_lowrate(const std::vector<RadiusMatrix>& matrices,
                                      const RdConfig& cfg, int threads) {
  validate_rd(cfg);
  for (const RadiusMatrix& m : matrices) check_matrix(m);

  LowRadiusResult out;
  out.payloads.resize(matrices.size());
  out.reconstructed.resize(matrices.size());
  detail::parallel_for(
      matrices.size(), static_cast<unsigned>(std::max(1, threads)),
      [&](std::size_t i) {
        std::vector<std::int32_t> q = quantize_matrix(matrices[i], cfg.step);
        std::vector<std::int32_t> res = residuals_of(q);

        MatrixPayload& payload = out.payloads[i];
        payload.fill = static_cast<std::uint32_t>(q.size());
        if (!res.empty()) {
          std::vector<double> as_double(res.begin(), res.end());
          LaplaceParams fit = fit_laplace(std::move(as_double));
          payload.center = static_cast<std::int32_t>(std::llround(fit.mu));
          payload.scale = fit.b;

          RangeEncoder enc;
          IntContexts ctx;
          ctx.init_from_laplace(payload.scale);
          for (std::int32_t r : res) {
            std::int64_t centered =
                static_cast<std::int64_t>(r) - payload.center;
            if (centered < INT32_MIN || centered > INT32_MAX) {
              throw InvalidInputError("radius residual exceeds the symbol range");
            }
            encode_int(enc, ctx, static_cast<std::int32_t>(centered));
          }
          payload.data = enc.finish();
        }
        out.reconstructed[i] = rebuild_matrix(q, cfg.step);
      });
  return out;
}

std::vector<RadiusMatrix> decode_radius_lowrate(
    const std::vector<MatrixPayload>& payloads, double step, int threads) {
  if (!(step > 0.0)) throw ConfigError("radius step must be positive");
  std::vector<RadiusMatrix> out(payloads.size());
  detail::parallel_for(
      payloads.size(), static_cast<unsigned>(std::max(1, threads)),
      [&](std::size_t i) {
        const MatrixPayload& payload = payloads[i];
        if (payload.fill > kMatrixCells) {
          throw CorruptionError("matrix fill count exceeds the cell count");
        }
        if (!(payload.scale > 0.0) || !std::isfinite(payload.scale)) {
          throw CorruptionError("matrix Laplace scale is not positive");
        }
        std::vector<std::int32_t> q(payload.fill);
        if (payload.fill > 0) {
          RangeDecoder dec(payload.data);
          IntContexts ctx;
          ctx.init_from_laplace(payload.scale);
          for (std::size_t k = 0; k < q.size(); ++k) {
            std::int64_t predicted = 0;
            if (k >= static_cast<std::size_t>(kMatrixDim)) {
              predicted = q[k - kMatrixDim];
            } else if (k > 0) {
              predicted = q[k - 1];
            }
            std::int64_t value = predicted + payload.center +
                                 static_cast<std::int64_t>(decode_int(dec, ctx));
            if (value < INT32_MIN || value > INT32_MAX) {
              throw CorruptionError("decoded radius cell out of range");
            }
            q[k] = static_cast<std::int32_t>(value);
          }
        }
        out[i] = rebuild_matrix(q, step);
      });
  return out;
}

double rate_estimate(const std::vector<std::int32_t>& residuals,
                     const LaplaceParams& params, double side_bits) {
  if (residuals.empty()) {
    throw InvalidInputError("rate estimate needs at least one residual");
  }
  double bits = side_bits;
  for (std::int32_t r : residuals) {
    bits += laplace_bits(static_cast<double>(r), params, 1.0);
  }
  return bits / static_cast<double>(residuals.size());
}

double matrix_distortion(const RadiusMatrix& a, const RadiusMatrix& b) {
  check_matrix(a);
  check_matrix(b);
  if (a.fill != b.fill) {
    throw InvalidInputError("matrix distortion needs equal fill counts");
  }
  if (a.fill == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < a.fill; ++k) {
    double d = a.values[k] - b.values[k];
    sum += d * d;
  }
  return sum / static_cast<double>(a.fill);
}

double rd_loss(double rate_bits_per_point, double distortion, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("rd lambda must be positive");
  return rate_bits_per_point + lambda * distortion;
}

LowRateEncoding encode_cloud_low(const TreeSet& set, const LowRateConfig& cfg) {
  validate_qp(cfg.qp);
  validate_rd(cfg.rd);
  if (!(cfg.phi_ar > 0.0)) throw ConfigError("azimuth resolution must be positive");

  LowRateEncoding out;
  out.step = cfg.rd.step;

  RadiusArrangement arranged = arrange_radius_matrices(set);
  LowRadiusResult radius =
      encode_radius_lowrate(arranged.matrices, cfg.rd, cfg.threads);
  out.matrices = std::move(radius.payloads);
  std::vector<std::vector<double>> recon_r =
      split_radius_sequences(radius.reconstructed, arranged.tree_sizes);

  const ElevationPredictor predictor = delta_predictor();
  int laser_count = 1;
  for (const PredictiveTree& tree : set.trees) {
    laser_count = std::max(laser_count, tree.laser_id + 1);
  }

  out.trees.resize(set.trees.size());
  detail::parallel_for(
      set.trees.size(), static_cast<unsigned>(std::max(1, cfg.threads)),
      [&](std::size_t i) {
        const PredictiveTree& tree = set.trees[i];
        std::vector<double> phi, theta;
        phi.reserve(tree.points.size());
        theta.reserve(tree.points.size());
        for (const SphericalPoint& p : tree.points) {
          phi.push_back(p.phi);
          theta.push_back(p.theta);
        }

        AzimuthStreams az = encode_azimuth(phi, cfg.phi_ar, cfg.qp.q_phi,
                                           cfg.qp.q_delta, cfg.skip_bias);
        ElevationStream el =
            encode_elevation(theta, recon_r[i], az.reconstructed,
                             tree.laser_id, laser_count, predictor,
                             cfg.qp.q_theta);

        TreePayload& payload = out.trees[i];
        payload.laser_id = tree.laser_id;
        payload.count = static_cast<std::uint32_t>(tree.points.size());
        if (!tree.points.empty()) {
          payload.root_r = recon_r[i][0];
          payload.root_theta = theta[0];
          payload.root_phi = phi[0];
        }
        payload.slopes = std::move(az.slopes);
        payload.biases = std::move(az.biases);
        payload.elevations = std::move(el.data);
      });
  return out;
}

std::vector<SphericalPoint> decode_cloud_low(const LowRateEncoding& encoding,
                                             const LowRateConfig& cfg) {
  validate_qp(cfg.qp);
  if (!(cfg.phi_ar > 0.0)) throw ConfigError("azimuth resolution must be positive");

  std::vector<RadiusMatrix> matrices =
      decode_radius_lowrate(encoding.matrices, encoding.step, cfg.threads);
  std::vector<std::size_t> tree_sizes;
  tree_sizes.reserve(encoding.trees.size());
  for (const TreePayload& p : encoding.trees) {
    if (p.count == 0) throw CorruptionError("tree payload with zero points");
    tree_sizes.push_back(p.count);
  }
  std::vector<std::vector<double>> recon_r;
  try {
    recon_r = split_radius_sequences(matrices, tree_sizes);
  } catch (const InvalidInputError& e) {
    throw CorruptionError(e.what());
  }

  const ElevationPredictor predictor = delta_predictor();
  int laser_count = 1;
  for (const TreePayload& p : encoding.trees) {
    laser_count = std::max(laser_count, p.laser_id + 1);
  }

  std::vector<std::vector<SphericalPoint>> parts(encoding.trees.size());
  detail::parallel_for(
      encoding.trees.size(), static_cast<unsigned>(std::max(1, cfg.threads)),
      [&](std::size_t i) {
        const TreePayload& p = encoding.trees[i];
        std::vector<double> phi =
            decode_azimuth(p.slopes, p.biases, p.root_phi, p.count, cfg.phi_ar,
                           cfg.qp.q_phi, cfg.qp.q_delta, cfg.skip_bias);
        std::vector<double> theta = decode_elevation(
            p.elevations, p.root_theta, recon_r[i], phi, p.laser_id,
            laser_count, predictor, cfg.qp.q_theta);

        std::vector<SphericalPoint>& out = parts[i];
        out.resize(p.count);
        for (std::size_t n = 0; n < p.count; ++n) {
          out[n].r = recon_r[i][n];
          out[n].phi = phi[n];
          out[n].theta = theta[n];
          out[n].laser_id = p.laser_id;
        }
      });

  std::vector<SphericalPoint> cloud;
  std::size_t total = 0;
  for (const auto& part : parts) total += part.size();
  cloud.reserve(total);
  for (auto& part : parts) cloud.insert(cloud.end(), part.begin(), part.end());
  return cloud;
}

}  // namespace lpcm
