// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0
//
// High-bitrate coding mode: azimuths as differenced step multiples of a
// unit angle, radii as closed-loop previous-point differences, elevations
// as closed-loop residuals against a pluggable predictor. Every stream is
// context-adaptive binary arithmetic coded.

#ifndef LPCM_HIGHRATE_HPP_
#define LPCM_HIGHRATE_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "lpcm/predictor.hpp"
#include "lpcm/predtree.hpp"

namespace lpcm {

// Quantization parameters: q_delta and q_theta are steps per degree, q_r
// steps per meter, and q_phi divides the native azimuth resolution to give
// the azimuth step unit.
struct QpVector {
  int q_delta = 1;
  int q_phi = 1;
  int q_theta = 1;
  int q_r = 1;
};

// Throws ConfigError unless 1 <= q_phi <= 16 and the rest lie in 1..256.
void validate_qp(const QpVector& qp);

// Elevation predictor plugged into the closed loop. `window` is how many
// trailing reconstructed tuples the context carries; `predict` must be a
// pure function of its context, because the decoder replays it on its own
// reconstructions and both sides have to see identical values.
struct ElevationPredictor {
  int window = 1;
  std::function<double(const PredictorContext&)> predict;
};

// Previous-point rule (the high-rate baseline and the low-rate default).
ElevationPredictor delta_predictor();
// Recurrent network predictor; the weights are shared by the returned
// closures, so copying the predictor is cheap.
ElevationPredictor lstm_predictor(const LstmWeights& weights);

// One coded chain: a raw full-precision root plus four independently
// entropy-coded streams in the normative order slopes, biases, radii,
// elevations. All streams are empty for a single-point chain; the bias
// stream is empty whenever the encoder skipped bias coding.
struct TreePayload {
  int laser_id = 0;
  std::uint32_t count = 0;
  double root_r = 0.0;
  double root_theta = 0.0;
  double root_phi = 0.0;
  std::vector<std::uint8_t> slopes;
  std::vector<std::uint8_t> biases;
  std::vector<std::uint8_t> radii;
  std::vector<std::uint8_t> elevations;
};

struct HighRateConfig {
  QpVector qp;
  double phi_ar = 0.2;    // native azimuth resolution, degrees
  bool skip_bias = true;  // drop the bias stream (implied biases of zero)
  int threads = 1;
};

// --- Per-axis building blocks (exposed for targeted testing) -------------

struct AzimuthStreams {
  std::vector<std::uint8_t> slopes;
  std::vector<std::uint8_t> biases;
  std::vector<double> reconstructed;
};

// phi[0] is the chain root and is reproduced exactly; later azimuths are
// coded as step-multiple differences plus (optionally) quantized biases.
// The root's step multiple is derived from the raw root on both sides, so
// it is never part of the stream.
AzimuthStreams encode_azimuth(const std::vector<double>& phi, double phi_ar,
                              int q_phi, int q_delta, bool skip_bias);
std::vector<double> decode_azimuth(const std::vector<std::uint8_t>& slopes,
                                   const std::vector<std::uint8_t>& biases,
                                   double root_phi, std::size_t count,
                                   double phi_ar, int q_phi, int q_delta,
                                   bool skip_bias);

struct RadiusStream {
  std::vector<std::uint8_t> data;
  std::vector<double> reconstructed;
};

RadiusStream encode_radius(const std::vector<double>& r, int q_r);
std::vector<double> decode_radius(const std::vector<std::uint8_t>& data,
                                  double root_r, std::size_t count, int q_r);

struct ElevationStream {
  std::vector<std::uint8_t> data;
  std::vector<double> reconstructed;
};

// recon_r / recon_phi are the already-reconstructed companion coordinates
// (the coding order guarantees they exist when elevations are coded) and
// feed the predictor context together with the reconstructed elevations.
ElevationStream encode_elevation(const std::vector<double>& theta,
                                 const std::vector<double>& recon_r,
                                 const std::vector<double>& recon_phi,
                                 int laser_id, int laser_count,
                                 const ElevationPredictor& predictor,
                                 int q_theta);
std::vector<double> decode_elevation(const std::vector<std::uint8_t>& data,
                                     double root_theta,
                                     const std::vector<double>& recon_r,
                                     const std::vector<double>& recon_phi,
                                     int laser_id, int laser_count,
                                     const ElevationPredictor& predictor,
                                     int q_theta);

// --- Whole-cloud pipeline ------------------------------------------------

// Encodes every tree of the set (trees may run in parallel; each chain's
// closed loop is sequential). Reconstruction errors obey the per-axis
// half-step bounds. Throws PredictorError if the predictor emits a
// non-finite value.
std::vector<TreePayload> encode_cloud_high(const TreeSet& set,
                                           const HighRateConfig& cfg,
                                           const ElevationPredictor& predictor);

// Rebuilds the reconstructed spherical points, concatenated in payload
// order (which is acquisition order for threshold-built trees). Bit-exactly
// equal to the encoder's own reconstructions.
std::vector<SphericalPoint> decode_cloud_high(
    const std::vector<TreePayload>& payloads, const HighRateConfig& cfg,
    const ElevationPredictor& predictor);

// Training contexts for the recurrent elevation predictor: every tree is
// run through the coding loop with the previous-point predictor at cfg.qp,
// and each position past the root yields one sample whose window holds up
// to `window` trailing reconstructed tuples and whose target is the raw
// elevation. Matching the coder's own reconstruction distribution is the
// point: the trained predictor sees exactly this input at coding time.
// Throws ConfigError unless window >= 1.
std::vector<TrainSample> collect_train_samples(const TreeSet& set,
                                               const HighRateConfig& cfg,
                                               int window);

}  // namespace lpcm

#endif  // LPCM_HIGHRATE_HPP_
