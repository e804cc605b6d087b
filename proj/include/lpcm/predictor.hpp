// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Elevation predictors for the high-bitrate coder: the previous-point delta
// rule and a small recurrent network (three LSTM layers, two MLP heads)
// trained from scratch on reconstructed coordinates.

#ifndef LPCM_PREDICTOR_HPP_
#define LPCM_PREDICTOR_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lpcm/geometry.hpp"

namespace lpcm {

// Decoder-visible state used to predict the next elevation along a chain:
// the trailing reconstructed points plus the already-decoded coordinates of
// the point being predicted. Histories shorter than the network window are
// front-padded by repeating the earliest tuple.
struct PredictorContext {
  std::vector<SphericalPoint> window;  // reconstructed, oldest first, non-empty
  double current_r = 0.0;              // reconstructed radius of the new point
  double current_phi = 0.0;            // reconstructed azimuth of the new point
  int laser_id = 0;
  int laser_count = 1;
};

// Previous-point rule: the prediction is the last reconstructed elevation
// (the root elevation for the first chained point).
double predict_delta(const PredictorContext& ctx);

// Serialized network parameters: hidden size H >= 1 (MLP heads use
// max(1, H/2) hidden units), window length W, and
// a flat 32-bit-float vector in the fixed layout documented in
// save_weights. 32-bit storage is what both encoder and decoder load, so
// predictions match bit for bit across the two sides.
struct LstmWeights {
  int hidden = 64;
  int window = 50;
  std::vector<float> values;

  static std::size_t parameter_count(int hidden);
};

// Double-precision working copy used for arithmetic (training and
// inference both run in 64-bit with a fixed summation order).
struct LstmParams {
  int hidden = 0;
  int window = 0;
  std::vector<double> values;
};

LstmParams to_params(const LstmWeights& weights);
LstmWeights to_weights(const LstmParams& params);  // rounds to 32-bit floats
LstmParams init_params(int hidden, int window, std::uint64_t seed);

// Unclamped forward pass in degrees; the exact function training optimizes.
double lstm_forward(const LstmParams& params, const PredictorContext& ctx);

// Accumulates d((prediction - target)^2)/dparam into grad (same length as
// params.values) and returns the sample's squared error.
double lstm_backward(const LstmParams& params, const PredictorContext& ctx,
                     double target_theta, std::vector<double>& grad);

// Forward pass clamped to [-90, 90] degrees for use as a coding prediction.
double predict_lstm(const LstmParams& params, const PredictorContext& ctx);
double predict_lstm(const LstmWeights& weights, const PredictorContext& ctx);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 256;
  double learning_rate = 0.001;
  double decay = 0.99;  // per-epoch learning-rate multiplier
  int window = 50;
  int hidden = 64;
};

struct TrainSample {
  PredictorContext ctx;
  double target_theta = 0.0;  // degrees
};

struct TrainReport {
  std::vector<double> epoch_mse;  // mean squared error per epoch, degrees^2
};

// Mean-squared-error training with adaptive-moment gradient descent
// (beta1=0.9, beta2=0.999, eps=1e-8) and full backpropagation through the
// unrolled window. Deterministic for a fixed seed. Throws DivergenceError
// if the loss stops being finite.
LstmWeights train(const std::vector<TrainSample>& dataset, const TrainConfig& cfg,
                  std::uint64_t seed, TrainReport* report = nullptr);

double mse_loss(const std::vector<double>& predictions,
                const std::vector<double>& targets);

// Weight file: magic "LPCW", version byte, H and W as 16-bit little-endian,
// layer count byte, the flat parameter vector as 32-bit little-endian
// floats, and a trailing CRC-32 of everything before it.
void save_weights(const LstmWeights& weights, const std::string& path);
LstmWeights load_weights(const std::string& path);

}  // namespace lpcm

#endif  // LPCM_PREDICTOR_HPP_
