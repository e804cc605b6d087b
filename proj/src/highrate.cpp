// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpcm/highrate.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "lpcm/detail/parallel.hpp"
#include "lpcm/entropy.hpp"
#include "lpcm/errors.hpp"

namespace lpcm {

namespace {

void check_range(int value, int hi, const char* name) {
  if (value < 1 || value > hi) {
    throw ConfigError(std::string(name) + " must lie in 1.." + std::to_string(hi));
  }
}

// Round half away from zero, the fixed rounding mode of every quantizer.
std::int64_t round_away(double x) { return std::llround(x); }

std::int32_t to_symbol(double scaled, const char* axis) {
  if (!(std::abs(scaled) < 2147483646.5)) {
    throw InvalidInputError(std::string("quantized ") + axis +
                            " value exceeds the 32-bit symbol range");
  }
  return static_cast<std::int32_t>(round_away(scaled));
}

// The one normative reconstruction expression per axis: evaluation order is
// fixed so encoder and decoder produce bit-identical doubles.
double rebuild_azimuth(double unit, std::int64_t s, std::int32_t bias,
                       int q_delta) {
  return unit * static_cast<double>(s) +
         static_cast<double>(bias) / static_cast<double>(q_delta);
}

double rebuild_step(double predicted, std::int32_t q, int steps) {
  return predicted + static_cast<double>(q) / static_cast<double>(steps);
}

void check_predictor(const ElevationPredictor& predictor) {
  if (!predictor.predict || predictor.window < 1) {
    throw ConfigError("elevation predictor needs a callable and a window >= 1");
  }
}

int derive_laser_count(const std::vector<TreePayload>& payloads) {
  int count = 1;
  for (const TreePayload& p : payloads) count = std::max(count, p.laser_id + 1);
  return count;
}

}  // namespace

void validate_qp(const QpVector& qp) {
  check_range(qp.q_delta, 256, "q_delta");
  check_range(qp.q_phi, 16, "q_phi");
  check_range(qp.q_theta, 256, "q_theta");
  check_range(qp.q_r, 256, "q_r");
}

ElevationPredictor delta_predictor() {
  ElevationPredictor p;
  p.window = 1;
  p.predict = [](const PredictorContext& ctx) { return predict_delta(ctx); };
  return p;
}

ElevationPredictor lstm_predictor(const LstmWeights& weights) {
  auto params = std::make_shared<const LstmParams>(to_params(weights));
  ElevationPredictor p;
  p.window = weights.window;
  p.predict = [params](const PredictorContext& ctx) {
    return predict_lstm(*params, ctx);
  };
  return p;
}

AzimuthStreams encode_azimuth(const std::vector<double>& phi, double phi_ar,
                              int q_phi, int q_delta, bool skip_bias) {
  if (!(phi_ar > 0.0)) throw ConfigError("azimuth resolution must be positive");
  check_range(q_phi, 16, "q_phi");
  check_range(q_delta, 256, "q_delta");

  AzimuthStreams out;
  if (phi.empty()) return out;
  out.reconstructed.reserve(phi.size());
  out.reconstructed.push_back(phi[0]);  // raw root
  if (phi.size() == 1) return out;

  const double unit = phi_ar / static_cast<double>(q_phi);
  RangeEncoder slope_enc;
  RangeEncoder bias_enc;
  IntContexts slope_ctx;
  IntContexts bias_ctx;
  std::int64_t prev = round_away(phi[0] / unit);
  for (std::size_t n = 1; n < phi.size(); ++n) {
    std::int64_t s = round_away(phi[n] / unit);
    encode_int(slope_enc, slope_ctx,
               to_symbol(static_cast<double>(s - prev), "azimuth slope"));
    prev = s;
    std::int32_t bias = 0;
    if (!skip_bias) {
      double delta = phi[n] - unit * static_cast<double>(s);
      bias = to_symbol(delta * static_cast<double>(q_delta), "azimuth bias");
      encode_int(bias_enc, bias_ctx, bias);
    }
    out.reconstructed.push_back(rebuild_azimuth(unit, s, bias, q_delta));
  }
  out.slopes = slope_enc.finish();
  if (!skip_bias) out.biases = bias_enc.finish();
  return out;
}

std::vector<double> decode_azimuth(const std::vector<std::uint8_t>& slopes,
                                   const std::vector<std::uint8_t>& biases,
                                   double root_phi, std::size_t count,
                                   double phi_ar, int q_phi, int q_delta,
                                   bool skip_bias) {
  if (!(phi_ar > 0.0)) throw ConfigError("azimuth resolution must be positive");
  check_range(q_phi, 16, "q_phi");
  check_range(q_delta, 256, "q_delta");

  std::vector<double> out;
  if (count == 0) return out;
  out.reserve(count);
  out.push_back(root_phi);
  if (count == 1) return out;

  const double unit = phi_ar / static_cast<double>(q_phi);
  RangeDecoder slope_dec(slopes);
  IntContexts slope_ctx;
  std::unique_ptr<RangeDecoder> bias_dec;
  IntContexts bias_ctx;
  if (!skip_bias) bias_dec = std::make_unique<RangeDecoder>(biases);

  std::int64_t prev = round_away(root_phi / unit);
  for (std::size_t n = 1; n < count; ++n) {
    std::int64_t s = prev + decode_int(slope_dec, slope_ctx);
    prev = s;
    std::int32_t bias = skip_bias ? 0 : decode_int(*bias_dec, bias_ctx);
    out.push_back(rebuild_azimuth(unit, s, bias, q_delta));
  }
  return out;
}

RadiusStream encode_radius(const std::vector<double>& r, int q_r) {
  check_range(q_r, 256, "q_r");
  RadiusStream out;
  if (r.empty()) return out;
  out.reconstructed.reserve(r.size());
  out.reconstructed.push_back(r[0]);  // raw root
  if (r.size() == 1) return out;

  RangeEncoder enc;
  IntContexts ctx;
  for (std::size_t n = 1; n < r.size(); ++n) {
    double predicted = out.reconstructed.back();
    std::int32_t q =
        to_symbol((r[n] - predicted) * static_cast<double>(q_r), "radius");
    encode_int(enc, ctx, q);
    out.reconstructed.push_back(rebuild_step(predicted, q, q_r));
  }
  out.data = enc.finish();
  return out;
}

std::vector<double> decode_radius(const std::vector<std::uint8_t>& data,
                                  double root_r, std::size_t count, int q_r) {
  check_range(q_r, 256, "q_r");
  std::vector<double> out;
  if (count == 0) return out;
  out.reserve(count);
  out.push_back(root_r);
  if (count == 1) return out;

  RangeDecoder dec(data);
  IntContexts ctx;
  for (std::size_t n = 1; n < count; ++n) {
    double predicted = out.back();
    out.push_back(rebuild_step(predicted, decode_int(dec, ctx), q_r));
  }
  return out;
}

namespace {

// Shared closed loop of the elevation coder. `code_residual` maps the true
// elevation (encoder) or the coded stream (decoder) to the quantized
// residual for point n.
template <typename ResidualFn>
std::vector<double> elevation_loop(double root_theta,
                                   const std::vector<double>& recon_r,
                                   const std::vector<double>& recon_phi,
                                   int laser_id, int laser_count,
                                   const ElevationPredictor& predictor,
                                   int q_theta, ResidualFn&& code_residual) {
  std::vector<double> recon;
  recon.reserve(recon_r.size());
  recon.push_back(root_theta);

  std::vector<SphericalPoint> history;
  history.reserve(recon_r.size());
  SphericalPoint root;
  root.r = recon_r[0];
  root.phi = recon_phi[0];
  root.theta = root_theta;
  root.laser_id = laser_id;
  history.push_back(root);

  PredictorContext ctx;
  ctx.laser_id = laser_id;
  ctx.laser_count = laser_count;
  const std::size_t window = static_cast<std::size_t>(predictor.window);
  for (std::size_t n = 1; n < recon_r.size(); ++n) {
    std::size_t w = std::min(window, history.size());
    ctx.window.assign(history.end() - static_cast<std::ptrdiff_t>(w),
                      history.end());
    ctx.current_r = recon_r[n];
    ctx.current_phi = recon_phi[n];
    double predicted = predictor.predict(ctx);
    if (!std::isfinite(predicted)) {
      throw PredictorError("elevation predictor produced a non-finite value");
    }
    std::int32_t q = code_residual(n, predicted);
    double rec = rebuild_step(predicted, q, q_theta);
    recon.push_back(rec);
    SphericalPoint p;
    p.r = recon_r[n];
    p.phi = recon_phi[n];
    p.theta = rec;
    p.laser_id = laser_id;
    history.push_back(p);
  }
  return recon;
}

}  // namespace

ElevationStream encode_elevation(const std::vector<double>& theta,
                                 const std::vector<double>& recon_r,
                                 const std::vector<double>& recon_phi,
                                 int laser_id, int laser_count,
                                 const ElevationPredictor& predictor,
                                 int q_theta) {
  check_range(q_theta, 256, "q_theta");
  check_predictor(predictor);
  if (theta.size() != recon_r.size() || theta.size() != recon_phi.size()) {
    throw InvalidInputError("elevation coder needs equal-length coordinate runs");
  }
  ElevationStream out;
  if (theta.empty()) return out;
  if (theta.size() == 1) {
    out.reconstructed.push_back(theta[0]);
    return out;
  }

  RangeEncoder enc;
  IntContexts ctx;
  out.reconstructed = elevation_loop(
      theta[0], recon_r, recon_phi, laser_id, laser_count, predictor, q_theta,
      [&](std::size_t n, double predicted) {
        std::int32_t q = to_symbol(
            (theta[n] - predicted) * static_cast<double>(q_theta), "elevation");
        encode_int(enc, ctx, q);
        return q;
      });
  out.data = enc.finish();
  return out;
}

std::vector<double> decode_elevation(const std::vector<std::uint8_t>& data,
                                     double root_theta,
                                     const std::vector<double>& recon_r,
                                     const std::vector<double>& recon_phi,
                                     int laser_id, int laser_count,
                                     const ElevationPredictor& predictor,
                                     int q_theta) {
  check_range(q_theta, 256, "q_theta");
  check_predictor(predictor);
  if (recon_r.size() != recon_phi.size()) {
    throw InvalidInputError("elevation coder needs equal-length coordinate runs");
  }
  if (recon_r.empty()) return {};
  if (recon_r.size() == 1) return {root_theta};

  RangeDecoder dec(data);
  IntContexts ctx;
  return elevation_loop(root_theta, recon_r, recon_phi, laser_id, laser_count,
                        predictor, q_theta, [&](std::size_t, double) {
                          return decode_int(dec, ctx);
                        });
}

std::vector<TreePayload> encode_cloud_high(const TreeSet& set,
                                           const HighRateConfig& cfg,
                                           const ElevationPredictor& predictor) {
  validate_qp(cfg.qp);
  if (!(cfg.phi_ar > 0.0)) throw ConfigError("azimuth resolution must be positive");
  check_predictor(predictor);

  int laser_count = 1;
  for (const PredictiveTree& tree : set.trees) {
    laser_count = std::max(laser_count, tree.laser_id + 1);
  }

  std::vector<TreePayload> payloads(set.trees.size());
  detail::parallel_for(
      set.trees.size(), static_cast<unsigned>(std::max(1, cfg.threads)),
      [&](std::size_t i) {
        const PredictiveTree& tree = set.trees[i];
        std::vector<double> phi, r, theta;
        phi.reserve(tree.points.size());
        r.reserve(tree.points.size());
        theta.reserve(tree.points.size());
        for (const SphericalPoint& p : tree.points) {
          phi.push_back(p.phi);
          r.push_back(p.r);
          theta.push_back(p.theta);
        }

        AzimuthStreams az = encode_azimuth(phi, cfg.phi_ar, cfg.qp.q_phi,
                                           cfg.qp.q_delta, cfg.skip_bias);
        RadiusStream rad = encode_radius(r, cfg.qp.q_r);
        ElevationStream el =
            encode_elevation(theta, rad.reconstructed, az.reconstructed,
                             tree.laser_id, laser_count, predictor,
                             cfg.qp.q_theta);

        TreePayload& out = payloads[i];
        out.laser_id = tree.laser_id;
        out.count = static_cast<std::uint32_t>(tree.points.size());
        if (!tree.points.empty()) {
          out.root_r = r[0];
          out.root_theta = theta[0];
          out.root_phi = phi[0];
        }
        out.slopes = std::move(az.slopes);
        out.biases = std::move(az.biases);
        out.radii = std::move(rad.data);
        out.elevations = std::move(el.data);
      });
  return payloads;
}

std::vector<SphericalPoint> decode_cloud_high(
    const std::vector<TreePayload>& payloads, const HighRateConfig& cfg,
    const ElevationPredictor& predictor) {
  validate_qp(cfg.qp);
  if (!(cfg.phi_ar > 0.0)) throw ConfigError("azimuth resolution must be positive");
  check_predictor(predictor);

  const int laser_count = derive_laser_count(payloads);
  std::vector<std::vector<SphericalPoint>> parts(payloads.size());
  detail::parallel_for(
      payloads.size(), static_cast<unsigned>(std::max(1, cfg.threads)),
      [&](std::size_t i) {
        const TreePayload& p = payloads[i];
        if (p.count == 0) {
          throw CorruptionError("tree payload with zero points");
        }
        std::vector<double> phi =
            decode_azimuth(p.slopes, p.biases, p.root_phi, p.count, cfg.phi_ar,
                           cfg.qp.q_phi, cfg.qp.q_delta, cfg.skip_bias);
        std::vector<double> r =
            decode_radius(p.radii, p.root_r, p.count, cfg.qp.q_r);
        std::vector<double> theta = decode_elevation(
            p.elevations, p.root_theta, r, phi, p.laser_id, laser_count,
            predictor, cfg.qp.q_theta);

        std::vector<SphericalPoint>& out = parts[i];
        out.resize(p.count);
        for (std::size_t n = 0; n < p.count; ++n) {
          out[n].r = r[n];
          out[n].phi = phi[n];
          out[n].theta = theta[n];
          out[n].laser_id = p.laser_id;
        }
      });

  std::vector<SphericalPoint> cloud;
  std::size_t total = 0;
  for (const auto& part : parts) total += part.size();
  cloud.reserve(total);
  for (auto& part : parts) {
    cloud.insert(cloud.end(), part.begin(), part.end());
  }
  return cloud;
}

std::vector<TrainSample> collect_train_samples(const TreeSet& set,
                                               const HighRateConfig& cfg,
                                               int window) {
  if (window < 1) throw ConfigError("predictor window must be at least 1");
  const ElevationPredictor bootstrap = delta_predictor();
  std::vector<TreePayload> payloads = encode_cloud_high(set, cfg, bootstrap);
  std::vector<SphericalPoint> recon =
      decode_cloud_high(payloads, cfg, bootstrap);

  // The laser identity must match what the coding loop will present, or the
  // trained network sees an input distribution it never trained on.
  int laser_count = 1;
  for (const PredictiveTree& tree : set.trees) {
    laser_count = std::max(laser_count, tree.laser_id + 1);
  }

  std::vector<TrainSample> samples;
  std::size_t offset = 0;
  const std::size_t w = static_cast<std::size_t>(window);
  for (const PredictiveTree& tree : set.trees) {
    const std::size_t n = tree.points.size();
    for (std::size_t i = 1; i < n; ++i) {
      TrainSample s;
      const std::size_t begin = offset + (i > w ? i - w : 0);
      s.ctx.window.assign(recon.begin() + static_cast<std::ptrdiff_t>(begin),
                          recon.begin() + static_cast<std::ptrdiff_t>(offset + i));
      s.ctx.current_r = recon[offset + i].r;
      s.ctx.current_phi = recon[offset + i].phi;
      s.ctx.laser_id = tree.laser_id;
      s.ctx.laser_count = laser_count;
      s.target_theta = tree.points[i].theta;
      samples.push_back(std::move(s));
    }
    offset += n;
  }
  return samples;
}

}  // namespace lpcm
