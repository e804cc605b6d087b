// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpcm/predictor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "lpcm/detail/bytes.hpp"
#include "lpcm/errors.hpp"

namespace lpcm {

namespace {

constexpr int kFeatureCount = 4;  // (r, theta, phi, laser) normalized
constexpr int kLayerCount = 3;
constexpr int kGateCount = 4;  // input, forget, candidate, output

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void validate_shape(int hidden, int window) {
  if (hidden < 1) throw ConfigError("hidden size must be at least 1");
  if (window < 1) throw ConfigError("window length must be at least 1");
}

int layer_input(int hidden, int layer) {
  return layer == 0 ? kFeatureCount : hidden;
}

// Width of both MLP hidden layers.
int mlp_width(int hidden) { return std::max(1, hidden / 2); }

// Flat-vector layout. Per LSTM layer: four gates in the order input,
// forget, candidate, output, each as a H x (in + H) row-major matrix
// followed by its H biases. Then the post-stack head A1/a1 (H x H, tanh)
// and A2/a2 (H/2 x H, linear); then the fusion head B1/c1
// (H/2 x (H/2 + 4), tanh) and B2/c2 (1 x H/2, linear).
struct Layout {
  int hidden;
  std::size_t lstm_gate_w[kLayerCount][kGateCount];
  std::size_t lstm_gate_b[kLayerCount][kGateCount];
  std::size_t a1_w, a1_b, a2_w, a2_b;
  std::size_t b1_w, b1_b, b2_w, b2_b;
  std::size_t total;

  explicit Layout(int h) : hidden(h) {
    std::size_t off = 0;
    for (int l = 0; l < kLayerCount; ++l) {
      std::size_t in = static_cast<std::size_t>(layer_input(h, l));
      for (int g = 0; g < kGateCount; ++g) {
        lstm_gate_w[l][g] = off;
        off += static_cast<std::size_t>(h) * (in + static_cast<std::size_t>(h));
        lstm_gate_b[l][g] = off;
        off += static_cast<std::size_t>(h);
      }
    }
    std::size_t h2 = static_cast<std::size_t>(mlp_width(h));
    std::size_t hs = static_cast<std::size_t>(h);
    a1_w = off;
    off += hs * hs;
    a1_b = off;
    off += hs;
    a2_w = off;
    off += h2 * hs;
    a2_b = off;
    off += h2;
    b1_w = off;
    off += h2 * (h2 + kFeatureCount);
    b1_b = off;
    off += h2;
    b2_w = off;
    off += h2;
    b2_b = off;
    off += 1;
    total = off;
  }
};

// Normalized feature tuple for one reconstructed point.
void normalize(const SphericalPoint& p, int laser_count, double out[kFeatureCount]) {
  double den = laser_count > 1 ? static_cast<double>(laser_count - 1) : 1.0;
  out[0] = p.r / 100.0;
  out[1] = p.theta / 90.0;
  out[2] = p.phi / 180.0;
  out[3] = static_cast<double>(p.laser_id) / den;
}

// The window fed to the recurrent stack: the last `window` reconstructed
// tuples, front-padded by repeating the earliest available one.
std::vector<std::array<double, kFeatureCount>> window_features(
    const LstmParams& params, const PredictorContext& ctx) {
  if (ctx.window.empty()) {
    throw InvalidInputError("predictor context has no history");
  }
  std::size_t w = static_cast<std::size_t>(params.window);
  std::vector<std::array<double, kFeatureCount>> feats(w);
  std::size_t have = ctx.window.size();
  for (std::size_t t = 0; t < w; ++t) {
    std::size_t idx = have >= w ? have - w + t : (t + have >= w ? t + have - w : 0);
    normalize(ctx.window[idx], ctx.laser_count, feats[t].data());
  }
  return feats;
}

void current_features(const PredictorContext& ctx, double out[kFeatureCount]) {
  double den = ctx.laser_count > 1 ? static_cast<double>(ctx.laser_count - 1) : 1.0;
  out[0] = ctx.current_r / 100.0;
  out[1] = ctx.window.back().theta / 90.0;
  out[2] = ctx.current_phi / 180.0;
  out[3] = static_cast<double>(ctx.laser_id) / den;
}

// All intermediate activations of one forward pass, kept for backprop.
struct Trace {
  // Indexed [layer][step]; each entry holds H values unless noted.
  std::vector<std::vector<std::vector<double>>> gate_i, gate_f, gate_g, gate_o;
  std::vector<std::vector<std::vector<double>>> cell, cell_tanh, hidden_out;
  std::vector<std::vector<std::vector<double>>> inputs;  // per-layer step input
  std::vector<double> a1_pre, a1_act, a2_out;            // post-stack head
  std::vector<double> fused_in, b1_pre, b1_act;          // fusion head
  double out_norm = 0.0;
};

double forward_pass(const LstmParams& params, const PredictorContext& ctx,
                    Trace* trace) {
  const Layout layout(params.hidden);
  if (params.values.size() != layout.total) {
    throw ConfigError("parameter vector does not match the network shape");
  }
  const int h = params.hidden;
  const int h2 = mlp_width(h);
  const int steps = params.window;
  const double* v = params.values.data();

  auto feats = window_features(params, ctx);

  std::vector<std::vector<double>> hs(kLayerCount, std::vector<double>(h, 0.0));
  std::vector<std::vector<double>> cs(kLayerCount, std::vector<double>(h, 0.0));
  if (trace) {
    auto shape = [&](auto& field) {
      field.assign(kLayerCount, std::vector<std::vector<double>>(
                                    static_cast<std::size_t>(steps)));
    };
    shape(trace->gate_i);
    shape(trace->gate_f);
    shape(trace->gate_g);
    shape(trace->gate_o);
    shape(trace->cell);
    shape(trace->cell_tanh);
    shape(trace->hidden_out);
    shape(trace->inputs);
  }

  std::vector<double> x;
  for (int t = 0; t < steps; ++t) {
    x.assign(feats[static_cast<std::size_t>(t)].begin(),
             feats[static_cast<std::size_t>(t)].end());
    for (int l = 0; l < kLayerCount; ++l) {
      const int in = layer_input(h, l);
      std::vector<double>& h_prev = hs[l];
      std::vector<double>& c_prev = cs[l];
      std::vector<double> gi(h), gf(h), gg(h), go(h), c(h), tc(h), hout(h);
      for (int u = 0; u < h; ++u) {
        double zi = v[layout.lstm_gate_b[l][0] + static_cast<std::size_t>(u)];
        double zf = v[layout.lstm_gate_b[l][1] + static_cast<std::size_t>(u)];
        double zg = v[layout.lstm_gate_b[l][2] + static_cast<std::size_t>(u)];
        double zo = v[layout.lstm_gate_b[l][3] + static_cast<std::size_t>(u)];
        std::size_t row = static_cast<std::size_t>(u) *
                          (static_cast<std::size_t>(in) + static_cast<std::size_t>(h));
        const double* wi = v + layout.lstm_gate_w[l][0] + row;
        const double* wf = v + layout.lstm_gate_w[l][1] + row;
        const double* wg = v + layout.lstm_gate_w[l][2] + row;
        const double* wo = v + layout.lstm_gate_w[l][3] + row;
        for (int k = 0; k < in; ++k) {
          double xv = x[static_cast<std::size_t>(k)];
          zi += wi[k] * xv;
          zf += wf[k] * xv;
          zg += wg[k] * xv;
          zo += wo[k] * xv;
        }
        for (int k = 0; k < h; ++k) {
          double hv = h_prev[static_cast<std::size_t>(k)];
          zi += wi[in + k] * hv;
          zf += wf[in + k] * hv;
          zg += wg[in + k] * hv;
          zo += wo[in + k] * hv;
        }
        gi[u] = sigmoid(zi);
        gf[u] = sigmoid(zf);
        gg[u] = std::tanh(zg);
        go[u] = sigmoid(zo);
        c[u] = gf[u] * c_prev[static_cast<std::size_t>(u)] + gi[u] * gg[u];
        tc[u] = std::tanh(c[u]);
        hout[u] = go[u] * tc[u];
      }
      if (trace) {
        trace->inputs[l][static_cast<std::size_t>(t)] = x;
        trace->gate_i[l][static_cast<std::size_t>(t)] = gi;
        trace->gate_f[l][static_cast<std::size_t>(t)] = gf;
        trace->gate_g[l][static_cast<std::size_t>(t)] = gg;
        trace->gate_o[l][static_cast<std::size_t>(t)] = go;
        trace->cell[l][static_cast<std::size_t>(t)] = c;
        trace->cell_tanh[l][static_cast<std::size_t>(t)] = tc;
        trace->hidden_out[l][static_cast<std::size_t>(t)] = hout;
      }
      cs[l] = std::move(c);
      hs[l] = hout;
      x = std::move(hout);
    }
  }

  // Post-stack head on the final top hidden state.
  const std::vector<double>& top = hs[kLayerCount - 1];
  std::vector<double> a1_pre(h), a1_act(h), a2_out(h2);
  for (int u = 0; u < h; ++u) {
    double z = v[layout.a1_b + static_cast<std::size_t>(u)];
    const double* row = v + layout.a1_w + static_cast<std::size_t>(u) * static_cast<std::size_t>(h);
    for (int k = 0; k < h; ++k) z += row[k] * top[static_cast<std::size_t>(k)];
    a1_pre[u] = z;
    a1_act[u] = std::tanh(z);
  }
  for (int u = 0; u < h2; ++u) {
    double z = v[layout.a2_b + static_cast<std::size_t>(u)];
    const double* row = v + layout.a2_w + static_cast<std::size_t>(u) * static_cast<std::size_t>(h);
    for (int k = 0; k < h; ++k) z += row[k] * a1_act[static_cast<std::size_t>(k)];
    a2_out[u] = z;
  }

  // Fusion head over [head output; current-point features].
  double cur[kFeatureCount];
  current_features(ctx, cur);
  std::vector<double> fused(static_cast<std::size_t>(h2) + kFeatureCount);
  std::copy(a2_out.begin(), a2_out.end(), fused.begin());
  std::copy(cur, cur + kFeatureCount, fused.begin() + h2);
  std::vector<double> b1_pre(h2), b1_act(h2);
  for (int u = 0; u < h2; ++u) {
    double z = v[layout.b1_b + static_cast<std::size_t>(u)];
    const double* row = v + layout.b1_w +
                        static_cast<std::size_t>(u) * (static_cast<std::size_t>(h2) + kFeatureCount);
    for (std::size_t k = 0; k < fused.size(); ++k) z += row[k] * fused[k];
    b1_pre[u] = z;
    b1_act[u] = std::tanh(z);
  }
  double out = v[layout.b2_b];
  for (int k = 0; k < h2; ++k) {
    out += v[layout.b2_w + static_cast<std::size_t>(k)] * b1_act[static_cast<std::size_t>(k)];
  }

  if (trace) {
    trace->a1_pre = std::move(a1_pre);
    trace->a1_act = std::move(a1_act);
    trace->a2_out = std::move(a2_out);
    trace->fused_in = std::move(fused);
    trace->b1_pre = std::move(b1_pre);
    trace->b1_act = std::move(b1_act);
    trace->out_norm = out;
  }
  return out * 90.0;  // denormalize to degrees
}

}  // namespace

std::size_t LstmWeights::parameter_count(int hidden) {
  validate_shape(hidden, 1);
  return Layout(hidden).total;
}

double predict_delta(const PredictorContext& ctx) {
  if (ctx.window.empty()) {
    throw InvalidInputError("predictor context has no history");
  }
  return ctx.window.back().theta;
}

LstmParams to_params(const LstmWeights& weights) {
  validate_shape(weights.hidden, weights.window);
  if (weights.values.size() != LstmWeights::parameter_count(weights.hidden)) {
    throw ConfigError("weight vector length does not match the hidden size");
  }
  LstmParams p;
  p.hidden = weights.hidden;
  p.window = weights.window;
  p.values.assign(weights.values.begin(), weights.values.end());
  return p;
}

LstmWeights to_weights(const LstmParams& params) {
  validate_shape(params.hidden, params.window);
  LstmWeights w;
  w.hidden = params.hidden;
  w.window = params.window;
  w.values.assign(params.values.begin(), params.values.end());
  return w;
}

LstmParams init_params(int hidden, int window, std::uint64_t seed) {
  validate_shape(hidden, window);
  Layout layout(hidden);
  LstmParams p;
  p.hidden = hidden;
  p.window = window;
  p.values.assign(layout.total, 0.0);
  std::mt19937_64 eng(seed);
  auto uniform = [&eng](double lo, double hi) {
    double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  };
  auto fill = [&](std::size_t off, std::size_t count, int fan_in) {
    double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) p.values[off + i] = uniform(-s, s);
  };
  for (int l = 0; l < kLayerCount; ++l) {
    int in = layer_input(hidden, l);
    std::size_t wsize = static_cast<std::size_t>(hidden) *
                        (static_cast<std::size_t>(in) + static_cast<std::size_t>(hidden));
    for (int g = 0; g < kGateCount; ++g) {
      fill(layout.lstm_gate_w[l][g], wsize, in + hidden);
    }
    // Forget-gate bias starts at +1 so early training keeps long memories.
    for (int u = 0; u < hidden; ++u) {
      p.values[layout.lstm_gate_b[l][1] + static_cast<std::size_t>(u)] = 1.0;
    }
  }
  int h2 = mlp_width(hidden);
  fill(layout.a1_w, static_cast<std::size_t>(hidden) * static_cast<std::size_t>(hidden), hidden);
  fill(layout.a2_w, static_cast<std::size_t>(h2) * static_cast<std::size_t>(hidden), hidden);
  fill(layout.b1_w, static_cast<std::size_t>(h2) * (static_cast<std::size_t>(h2) + kFeatureCount),
       h2 + kFeatureCount);
  fill(layout.b2_w, static_cast<std::size_t>(h2), h2);
  return p;
}

double lstm_forward(const LstmParams& params, const PredictorContext& ctx) {
  return forward_pass(params, ctx, nullptr);
}

double predict_lstm(const LstmParams& params, const PredictorContext& ctx) {
  return std::clamp(forward_pass(params, ctx, nullptr), -90.0, 90.0);
}

double predict_lstm(const LstmWeights& weights, const PredictorContext& ctx) {
  return predict_lstm(to_params(weights), ctx);
}

double lstm_backward(const LstmParams& params, const PredictorContext& ctx,
                     double target_theta, std::vector<double>& grad) {
  const Layout layout(params.hidden);
  if (grad.size() != layout.total) {
    throw ConfigError("gradient buffer does not match the parameter count");
  }
  const int h = params.hidden;
  const int h2 = mlp_width(h);
  const int steps = params.window;
  const double* v = params.values.data();

  Trace trace;
  double prediction = forward_pass(params, ctx, &trace);
  double diff = prediction - target_theta;
  double loss = diff * diff;

  // d loss / d out_norm; the output is 90 * out_norm.
  double d_out = 2.0 * diff * 90.0;

  // Fusion head backward.
  std::vector<double> d_b1_act(h2, 0.0);
  grad[layout.b2_b] += d_out;
  for (int k = 0; k < h2; ++k) {
    grad[layout.b2_w + static_cast<std::size_t>(k)] +=
        d_out * trace.b1_act[static_cast<std::size_t>(k)];
    d_b1_act[static_cast<std::size_t>(k)] =
        d_out * v[layout.b2_w + static_cast<std::size_t>(k)];
  }
  std::vector<double> d_fused(trace.fused_in.size(), 0.0);
  for (int u = 0; u < h2; ++u) {
    double t = trace.b1_act[static_cast<std::size_t>(u)];
    double dz = d_b1_act[static_cast<std::size_t>(u)] * (1.0 - t * t);
    grad[layout.b1_b + static_cast<std::size_t>(u)] += dz;
    std::size_t row = layout.b1_w + static_cast<std::size_t>(u) *
                                        (static_cast<std::size_t>(h2) + kFeatureCount);
    for (std::size_t k = 0; k < trace.fused_in.size(); ++k) {
      grad[row + k] += dz * trace.fused_in[k];
      d_fused[k] += v[row + k] * dz;
    }
  }

  // Post-stack head backward (current-point features carry no parameters).
  std::vector<double> d_a2(h2);
  for (int u = 0; u < h2; ++u) d_a2[static_cast<std::size_t>(u)] = d_fused[static_cast<std::size_t>(u)];
  std::vector<double> d_a1_act(h, 0.0);
  for (int u = 0; u < h2; ++u) {
    double dz = d_a2[static_cast<std::size_t>(u)];
    grad[layout.a2_b + static_cast<std::size_t>(u)] += dz;
    std::size_t row = layout.a2_w + static_cast<std::size_t>(u) * static_cast<std::size_t>(h);
    for (int k = 0; k < h; ++k) {
      grad[row + static_cast<std::size_t>(k)] += dz * trace.a1_act[static_cast<std::size_t>(k)];
      d_a1_act[static_cast<std::size_t>(k)] += v[row + static_cast<std::size_t>(k)] * dz;
    }
  }
  std::vector<double> d_top(h, 0.0);
  for (int u = 0; u < h; ++u) {
    double t = trace.a1_act[static_cast<std::size_t>(u)];
    double dz = d_a1_act[static_cast<std::size_t>(u)] * (1.0 - t * t);
    grad[layout.a1_b + static_cast<std::size_t>(u)] += dz;
    std::size_t row = layout.a1_w + static_cast<std::size_t>(u) * static_cast<std::size_t>(h);
    for (int k = 0; k < h; ++k) {
      grad[row + static_cast<std::size_t>(k)] +=
          dz * trace.hidden_out[kLayerCount - 1][static_cast<std::size_t>(steps - 1)]
                              [static_cast<std::size_t>(k)];
      d_top[static_cast<std::size_t>(k)] += v[row + static_cast<std::size_t>(k)] * dz;
    }
  }

  // Backpropagation through time. d_h[l]/d_c[l] hold the gradients flowing
  // into layer l's hidden/cell state at the step being processed;
  // d_x_from_above carries the gradient of the layer-above input.
  std::vector<std::vector<double>> d_h(kLayerCount, std::vector<double>(h, 0.0));
  std::vector<std::vector<double>> d_c(kLayerCount, std::vector<double>(h, 0.0));
  d_h[kLayerCount - 1] = d_top;
  std::vector<std::vector<double>> d_input(
      static_cast<std::size_t>(steps));  // gradient into layer l's input at step t
  for (int t = steps - 1; t >= 0; --t) {
    for (int l = kLayerCount - 1; l >= 0; --l) {
      const int in = layer_input(h, l);
      std::vector<double>& dh = d_h[l];
      // Below the top layer, the hidden state also fed the layer above's
      // input at this same step; fold that gradient in.
      if (l < kLayerCount - 1 && !d_input[static_cast<std::size_t>(t)].empty()) {
        for (int u = 0; u < h; ++u) {
          dh[static_cast<std::size_t>(u)] +=
              d_input[static_cast<std::size_t>(t)][static_cast<std::size_t>(u)];
        }
      }
      const auto& gi = trace.gate_i[l][static_cast<std::size_t>(t)];
      const auto& gf = trace.gate_f[l][static_cast<std::size_t>(t)];
      const auto& gg = trace.gate_g[l][static_cast<std::size_t>(t)];
      const auto& go = trace.gate_o[l][static_cast<std::size_t>(t)];
      const auto& tc = trace.cell_tanh[l][static_cast<std::size_t>(t)];
      const std::vector<double>* c_prev =
          t > 0 ? &trace.cell[l][static_cast<std::size_t>(t - 1)] : nullptr;
      const std::vector<double>* h_prev =
          t > 0 ? &trace.hidden_out[l][static_cast<std::size_t>(t - 1)] : nullptr;
      const auto& x = trace.inputs[l][static_cast<std::size_t>(t)];

      std::vector<double> dzi(h), dzf(h), dzg(h), dzo(h);
      std::vector<double>& dc = d_c[l];
      for (int u = 0; u < h; ++u) {
        double dho = dh[static_cast<std::size_t>(u)];
        double d_o = dho * tc[static_cast<std::size_t>(u)];
        double dcu = dc[static_cast<std::size_t>(u)] +
                     dho * go[static_cast<std::size_t>(u)] *
                         (1.0 - tc[static_cast<std::size_t>(u)] * tc[static_cast<std::size_t>(u)]);
        double cp = c_prev ? (*c_prev)[static_cast<std::size_t>(u)] : 0.0;
        double d_f = dcu * cp;
        double d_i = dcu * gg[static_cast<std::size_t>(u)];
        double d_g = dcu * gi[static_cast<std::size_t>(u)];
        dzi[u] = d_i * gi[static_cast<std::size_t>(u)] * (1.0 - gi[static_cast<std::size_t>(u)]);
        dzf[u] = d_f * gf[static_cast<std::size_t>(u)] * (1.0 - gf[static_cast<std::size_t>(u)]);
        dzg[u] = d_g * (1.0 - gg[static_cast<std::size_t>(u)] * gg[static_cast<std::size_t>(u)]);
        dzo[u] = d_o * go[static_cast<std::size_t>(u)] * (1.0 - go[static_cast<std::size_t>(u)]);
        dc[static_cast<std::size_t>(u)] = dcu * gf[static_cast<std::size_t>(u)];
      }

      std::vector<double> dx(static_cast<std::size_t>(in), 0.0);
      std::vector<double> dh_prev(h, 0.0);
      const std::size_t stride = static_cast<std::size_t>(in) + static_cast<std::size_t>(h);
      const double* dz[kGateCount] = {dzi.data(), dzf.data(), dzg.data(), dzo.data()};
      for (int g = 0; g < kGateCount; ++g) {
        std::size_t wbase = layout.lstm_gate_w[l][g];
        std::size_t bbase = layout.lstm_gate_b[l][g];
        for (int u = 0; u < h; ++u) {
          double z = dz[g][u];
          grad[bbase + static_cast<std::size_t>(u)] += z;
          std::size_t row = wbase + static_cast<std::size_t>(u) * stride;
          for (int k = 0; k < in; ++k) {
            grad[row + static_cast<std::size_t>(k)] += z * x[static_cast<std::size_t>(k)];
            dx[static_cast<std::size_t>(k)] += v[row + static_cast<std::size_t>(k)] * z;
          }
          if (h_prev) {
            for (int k = 0; k < h; ++k) {
              grad[row + static_cast<std::size_t>(in + k)] +=
                  z * (*h_prev)[static_cast<std::size_t>(k)];
              dh_prev[static_cast<std::size_t>(k)] +=
                  v[row + static_cast<std::size_t>(in + k)] * z;
            }
          }
          // h_prev is zero at t=0, so its weight gradient contribution and
          // the downstream dh_prev both vanish there.
        }
      }
      d_h[l] = std::move(dh_prev);
      if (l > 0) {
        d_input[static_cast<std::size_t>(t)] = std::move(dx);
      } else {
        d_input[static_cast<std::size_t>(t)].clear();
      }
    }
  }
  return loss;
}

double mse_loss(const std::vector<double>& predictions,
                const std::vector<double>& targets) {
  if (predictions.size() != targets.size() || predictions.empty()) {
    throw InvalidInputError("mse_loss needs equal-length non-empty sequences");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    double d = predictions[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

LstmWeights train(const std::vector<TrainSample>& dataset, const TrainConfig& cfg,
                  std::uint64_t seed, TrainReport* report) {
  if (dataset.empty()) throw InvalidInputError("training dataset is empty");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.learning_rate <= 0.0 ||
      cfg.decay <= 0.0) {
    throw ConfigError("training configuration values must be positive");
  }
  LstmParams params = init_params(cfg.hidden, cfg.window, seed);
  const std::size_t n_params = params.values.size();
  std::vector<double> grad(n_params), m(n_params, 0.0), v2(n_params, 0.0);
  std::mt19937_64 eng(seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  std::uint64_t step = 0;

  if (report) report->epoch_mse.clear();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = cfg.learning_rate * std::pow(cfg.decay, epoch);
    // Seeded Fisher-Yates keeps the trajectory reproducible everywhere.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(eng() % i);
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const TrainSample& sample = dataset[order[i]];
        epoch_loss += lstm_backward(params, sample.ctx, sample.target_theta, grad);
      }
      double scale = 1.0 / static_cast<double>(end - start);
      ++step;
      double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t p = 0; p < n_params; ++p) {
        double g = grad[p] * scale;
        m[p] = kBeta1 * m[p] + (1.0 - kBeta1) * g;
        v2[p] = kBeta2 * v2[p] + (1.0 - kBeta2) * g * g;
        double mhat = m[p] / bc1;
        double vhat = v2[p] / bc2;
        params.values[p] -= lr * mhat / (std::sqrt(vhat) + kEps);
      }
    }
    epoch_loss /= static_cast<double>(dataset.size());
    if (!std::isfinite(epoch_loss)) {
      std::ostringstream msg;
      msg << "training diverged at epoch " << epoch << " (loss " << epoch_loss << ")";
      throw DivergenceError(msg.str());
    }
    if (report) report->epoch_mse.push_back(epoch_loss);
  }
  for (double value : params.values) {
    if (!std::isfinite(value)) throw DivergenceError("non-finite trained weight");
  }
  return to_weights(params);
}

void save_weights(const LstmWeights& weights, const std::string& path) {
  validate_shape(weights.hidden, weights.window);
  if (weights.values.size() != LstmWeights::parameter_count(weights.hidden)) {
    throw ConfigError("weight vector length does not match the hidden size");
  }
  detail::ByteWriter out;
  out.u8('L');
  out.u8('P');
  out.u8('C');
  out.u8('W');
  out.u8(1);  // version
  out.u16(static_cast<std::uint16_t>(weights.hidden));
  out.u16(static_cast<std::uint16_t>(weights.window));
  out.u8(kLayerCount);
  for (float value : weights.values) out.f32(value);
  std::uint32_t crc = detail::crc32(out.data().data(), out.size());
  out.u32(crc);

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw FormatError("cannot open weight file for writing: " + path);
  file.write(reinterpret_cast<const char*>(out.data().data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) throw FormatError("failed writing weight file: " + path);
}

LstmWeights load_weights(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw FormatError("cannot open weight file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 14) throw CorruptionError("weight file shorter than its header");
  detail::ByteReader in(bytes.data(), bytes.size());
  if (in.u8() != 'L' || in.u8() != 'P' || in.u8() != 'C' || in.u8() != 'W') {
    throw FormatError("not a weight file (bad magic)");
  }
  std::uint8_t version = in.u8();
  if (version != 1) {
    std::ostringstream msg;
    msg << "unsupported weight file version " << static_cast<int>(version);
    throw FormatError(msg.str());
  }
  LstmWeights w;
  w.hidden = in.u16();
  w.window = in.u16();
  std::uint8_t layers = in.u8();
  if (layers != kLayerCount) throw FormatError("unexpected recurrent layer count");
  validate_shape(w.hidden, w.window);
  std::size_t count = LstmWeights::parameter_count(w.hidden);
  std::size_t expected = 10 + 4 * count + 4;
  if (bytes.size() != expected) {
    std::ostringstream msg;
    msg << "weight file size " << bytes.size() << " does not match " << expected
        << " for hidden size " << w.hidden;
    throw CorruptionError(msg.str());
  }
  w.values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) w.values.push_back(in.f32());
  std::uint32_t stored = in.u32();
  std::uint32_t computed = detail::crc32(bytes.data(), bytes.size() - 4);
  if (stored != computed) throw CorruptionError("weight file checksum mismatch");
  for (float value : w.values) {
    if (!std::isfinite(value)) throw CorruptionError("non-finite weight value");
  }
  return w;
}

}  // namespace lpcm
