// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: one self-contained check per release criterion, one
// verdict line each. Everything an auditor needs is in the line itself
// (counts, worst cases, margins). Exit code 0 when nothing failed; the
// real-data check reports SKIP when no scan is available.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lpcm/codec.hpp"
#include "lpcm/entropy.hpp"
#include "lpcm/errors.hpp"
#include "lpcm/geometry.hpp"
#include "lpcm/highrate.hpp"
#include "lpcm/io.hpp"
#include "lpcm/lowrate.hpp"
#include "lpcm/metrics.hpp"
#include "lpcm/predictor.hpp"
#include "lpcm/predtree.hpp"
#include "lpcm/qpselect.hpp"
#include "test_rng.hpp"

using lpcm::PredictiveTree;
using lpcm::QpVector;
using lpcm::SphericalPoint;
using lpcm::TreeSet;
using lpcm::testutil::TestRng;

namespace {

struct Outcome {
  enum Verdict { kPass, kFail, kSkip } verdict = kFail;
  std::string detail;
};

Outcome pass(const std::string& detail) { return {Outcome::kPass, detail}; }
Outcome fail(const std::string& detail) { return {Outcome::kFail, detail}; }
Outcome skip(const std::string& detail) { return {Outcome::kSkip, detail}; }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

SphericalPoint sp(double r, double theta, double phi, int laser) {
  SphericalPoint p;
  p.r = r;
  p.theta = theta;
  p.phi = phi;
  p.laser_id = laser;
  return p;
}

std::vector<SphericalPoint> flatten_trees(const TreeSet& set) {
  std::vector<SphericalPoint> all;
  for (const PredictiveTree& t : set.trees) {
    all.insert(all.end(), t.points.begin(), t.points.end());
  }
  return all;
}

struct AxisErrors {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

AxisErrors worst_axis_errors(const std::vector<SphericalPoint>& a,
                             const std::vector<SphericalPoint>& b) {
  AxisErrors worst;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst.r = std::max(worst.r, std::abs(a[i].r - b[i].r));
    worst.theta = std::max(worst.theta, std::abs(a[i].theta - b[i].theta));
    worst.phi = std::max(worst.phi, std::abs(a[i].phi - b[i].phi));
  }
  return worst;
}

// Generic randomized rotating-head scan: per-laser radius walks with
// occasional occlusion jumps, distinct elevations with jitter, a regular
// azimuth sweep. Used by the round-trip criterion with varying shapes.
TreeSet random_scan(TestRng& rng, int lasers, int per_laser, double phi_ar) {
  TreeSet set;
  for (int j = 0; j < lasers; ++j) {
    PredictiveTree tree;
    tree.laser_id = j;
    double base_theta = -28.0 + 50.0 * (j + 0.5) / lasers;
    double r = rng.uniform(5.0, 60.0);
    for (int i = 0; i < per_laser; ++i) {
      if (rng.next_below(50) == 0) {
        r = rng.uniform(3.0, 80.0);
      } else {
        r = std::clamp(r + rng.uniform(-0.3, 0.3), 2.0, 90.0);
      }
      double phi = -179.0 + i * phi_ar + rng.uniform(-0.3, 0.3) * phi_ar;
      double theta = base_theta + rng.uniform(-0.2, 0.2);
      tree.points.push_back(sp(r, theta, phi, j));
    }
    set.trees.push_back(std::move(tree));
  }
  return set;
}

// The dense 64-laser scan shared by the stream-share and mode-crossover
// criteria. 256 points per laser, so each chain fills exactly one row of
// the low-rate radius matrix and "row above" means "adjacent laser".
// Lasers track one base radius profile (a gentle walk plus shared wall
// jumps) with small per-laser deviations: along-chain differences are
// tighter than cross-laser ones at fine steps, while the shared jumps are
// paid once per column by cross-laser prediction but once per laser by
// along-chain prediction.
TreeSet dense_scan(TestRng& rng) {
  const int lasers = 64, per_laser = 256;
  const double unit = 360.0 / per_laser;
  std::vector<double> base(per_laser);
  double b = rng.uniform(15.0, 40.0);
  for (int i = 0; i < per_laser; ++i) {
    if (rng.next_below(16) == 0) {
      b = rng.uniform(8.0, 60.0);  // wall edge shared by all lasers
    } else {
      b = std::clamp(b + rng.uniform(-0.03, 0.03), 8.0, 60.0);
    }
    base[i] = b;
  }
  TreeSet set;
  for (int j = 0; j < lasers; ++j) {
    PredictiveTree tree;
    tree.laser_id = j;
    double amp = rng.uniform(0.08, 0.14);
    double freq = 2.0 + static_cast<double>(rng.next_below(4));
    double phase = rng.uniform(0.0, 6.28);
    double elev = -20.0 + 0.5 * j;
    for (int i = 0; i < per_laser; ++i) {
      double dev = amp * std::sin(freq * 6.283185307179586 * i / per_laser +
                                  phase);
      double r = std::clamp(base[i] + dev + rng.uniform(-0.015, 0.015), 2.0,
                            90.0);
      double phi = -179.6 + i * unit + rng.uniform(-0.07, 0.07);
      double theta = elev + rng.uniform(-0.04, 0.04);
      tree.points.push_back(sp(r, theta, phi, j));
    }
    set.trees.push_back(std::move(tree));
  }
  return set;
}

std::size_t stream_bytes(const std::vector<lpcm::TreePayload>& payloads,
                         std::vector<std::uint8_t> lpcm::TreePayload::* member) {
  std::size_t total = 0;
  for (const lpcm::TreePayload& p : payloads) total += (p.*member).size();
  return total;
}

std::size_t serialized_bytes(const TreeSet& set,
                             const lpcm::EncoderSettings& settings) {
  return lpcm::serialize_bitstream(lpcm::encode_cloud(set, settings)).size();
}

// --- criterion 1: round-trip bounds --------------------------------------

Outcome criterion_roundtrip() {
  auto start = std::chrono::steady_clock::now();
  TestRng rng(0xAC1ull);
  std::size_t violations = 0, pairs = 0, points = 0;
  double worst_margin = 0.0;  // worst error as a fraction of its bound

  for (int scan = 0; scan < 50; ++scan) {
    double target = std::exp(rng.uniform(std::log(1e3), std::log(1e5)));
    const int laser_choices[] = {4, 8, 16, 32, 64};
    int lasers = laser_choices[rng.next_below(5)];
    int per_laser = std::max(2, static_cast<int>(target) / lasers);
    double phi_ar = rng.uniform(0.1, 0.9);
    bool skip_bias = scan % 2 == 0;
    TreeSet set = random_scan(rng, lasers, per_laser, phi_ar);
    std::vector<SphericalPoint> original = flatten_trees(set);
    points += original.size();

    for (int rate = 1; rate <= 7; ++rate) {
      lpcm::RateConfig choice = lpcm::default_qp(rate);
      lpcm::EncoderSettings enc;
      enc.mode = choice.mode;
      enc.qp = choice.qp;
      enc.rd = choice.rd;
      enc.phi_ar = phi_ar;
      enc.skip_bias = skip_bias;
      enc.threads = 4;
      lpcm::Bitstream bs = lpcm::encode_cloud(set, enc);
      std::vector<std::uint8_t> bytes = lpcm::serialize_bitstream(bs);
      lpcm::DecoderSettings dec;
      dec.threads = 4;
      std::vector<SphericalPoint> decoded =
          lpcm::decode_cloud(lpcm::parse_bitstream(bytes), dec);
      if (decoded.size() != original.size()) {
        return fail(fmt("scan %d rate r%02d: decoded %zu of %zu points", scan,
                        rate, decoded.size(), original.size()));
      }

      double unit = phi_ar / choice.qp.q_phi;
      double phi_bound =
          skip_bias ? unit / 2 : unit / 2 + 0.5 / choice.qp.q_delta;
      double theta_bound = 0.5 / choice.qp.q_theta;
      double r_bound = choice.mode == lpcm::StreamMode::kLow
                           ? choice.rd.step / 2
                           : 0.5 / choice.qp.q_r;
      AxisErrors worst = worst_axis_errors(original, decoded);
      const double tol = 1e-12;
      if (worst.phi > phi_bound + tol || worst.theta > theta_bound + tol ||
          worst.r > r_bound + tol) {
        ++violations;
      }
      worst_margin = std::max({worst_margin, worst.phi / phi_bound,
                               worst.theta / theta_bound, worst.r / r_bound});
      ++pairs;
    }
  }

  double elapsed = seconds_since(start);
  if (violations > 0) {
    return fail(fmt("%zu of %zu scan/rate pairs violated a bound", violations,
                    pairs));
  }
  if (elapsed >= 300.0) {
    return fail(fmt("bounds held but runtime %.1f s exceeds 300 s", elapsed));
  }
  return pass(fmt("%zu pairs (%zu points), worst error %.4f of bound, %.1f s",
                  pairs, points, worst_margin, elapsed));
}

// --- criterion 2: distortion calculus ------------------------------------

Outcome criterion_distortion_calculus() {
  TestRng rng(0xD157ull);
  double worst_rel = 0.0;
  for (int n = 0; n < 10000; ++n) {
    double r = rng.uniform(1.0, 100.0);
    double theta = rng.uniform(-60.0, 60.0);
    double phi = rng.uniform(-180.0, 180.0);
    lpcm::AxisPerturbation pert;
    // Magnitudes from 0.01 up: the displacement of a vanishing perturbation
    // is pure floating-point cancellation, which no formula can match to
    // 1e-9 relative.
    double eps = rng.uniform(0.01, 0.5);
    if (rng.next_below(2) == 1) eps = -eps;
    switch (n % 3) {
      case 0: pert.delta_r_m = eps; break;
      case 1: pert.delta_theta_deg = eps; break;
      default: pert.delta_phi_deg = eps; break;
    }
    SphericalPoint a = sp(r, theta, phi, 0);
    SphericalPoint b = sp(r + pert.delta_r_m, theta + pert.delta_theta_deg,
                          phi + pert.delta_phi_deg, 0);
    lpcm::CartesianPoint pa = lpcm::spherical_to_cartesian(a);
    lpcm::CartesianPoint pb = lpcm::spherical_to_cartesian(b);
    double dx = pa.x - pb.x, dy = pa.y - pb.y, dz = pa.z - pb.z;
    double empirical = std::sqrt(dx * dx + dy * dy + dz * dz);
    double formula = lpcm::axis_distortion(pert, r, theta);
    double rel = std::abs(empirical - formula) / std::max(formula, 1e-30);
    worst_rel = std::max(worst_rel, rel);
  }
  if (worst_rel > 1e-9) {
    return fail(fmt("empirical vs formula relative error %.3g > 1e-9",
                    worst_rel));
  }

  // Worked values. The radius identity is exact; the elevation coefficient
  // 1.745e-3 is printed to four significant digits, so it is matched to a
  // half-ulp of that precision (the exact coefficient is tan(0.1 deg)).
  double dr = lpcm::axis_distortion_radius(0.1, 0.0);
  if (std::abs(dr - 0.1) > 0.1 * 1e-6) {
    return fail(fmt("radius worked value %.12g != 0.1", dr));
  }
  double coeff = lpcm::axis_distortion_elevation(1.0, 0.0, 0.1);
  if (std::abs(coeff - 1.745e-3) > 5e-7) {
    return fail(fmt("elevation coefficient %.9g vs 1.745e-3", coeff));
  }
  return pass(fmt("10000 tuples, worst relative error %.3g; "
                  "worked values 0.1 m and %.6g r",
                  worst_rel, coeff));
}

// --- criterion 3: entropy coder efficiency -------------------------------

Outcome criterion_entropy() {
  const double probabilities[] = {0.05, 0.1, 0.3, 0.5};
  const int n = 100000;
  std::string shares;
  for (double p : probabilities) {
    TestRng rng(static_cast<std::uint64_t>(p * 1000) + 0xE47ull);
    std::vector<int> bits(n);
    for (int i = 0; i < n; ++i) bits[i] = rng.uniform(0.0, 1.0) < p ? 1 : 0;

    lpcm::RangeEncoder enc;
    lpcm::BinaryContext ctx(p);
    for (int bit : bits) enc.encode_bit(ctx, bit);
    std::vector<std::uint8_t> payload = enc.finish();

    double entropy =
        -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
    double budget = 1.01 * n * entropy + 64.0;
    double coded = 8.0 * static_cast<double>(payload.size());
    if (coded > budget) {
      return fail(fmt("p=%.2f coded %.0f bits > budget %.0f", p, coded,
                      budget));
    }
    shares += fmt("%s%.4f", shares.empty() ? "" : "/", coded / (n * entropy));

    lpcm::RangeDecoder dec(payload);
    lpcm::BinaryContext dctx(p);
    for (int i = 0; i < n; ++i) {
      if (dec.decode_bit(dctx) != bits[i]) {
        return fail(fmt("p=%.2f bit %d decoded wrong", p, i));
      }
    }
  }

  // Exact round trip of a million signed integers over mixed magnitudes.
  TestRng rng(0x1E6ull);
  std::vector<std::int32_t> values(1000000);
  for (std::int32_t& v : values) {
    int width = 1 + static_cast<int>(rng.next_below(20));
    std::uint64_t mag = rng.next_below(1ull << width);
    v = static_cast<std::int32_t>(mag);
    if (rng.next_below(2) == 1) v = -v;
  }
  lpcm::RangeEncoder enc;
  lpcm::IntContexts ctx;
  for (std::int32_t v : values) lpcm::encode_int(enc, ctx, v);
  std::vector<std::uint8_t> payload = enc.finish();
  lpcm::RangeDecoder dec(payload);
  lpcm::IntContexts dctx;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (lpcm::decode_int(dec, dctx) != values[i]) {
      return fail(fmt("integer %zu decoded wrong", i));
    }
  }
  return pass(fmt("coded/entropy ratios %s; 1e6 integers exact (%zu bytes)",
                  shares.c_str(), payload.size()));
}

// --- criterion 4: gradient correctness -----------------------------------

Outcome criterion_gradients() {
  const int h = 4, w = 5;
  const double eps = 1e-5;
  TestRng rng(0x64ADull);
  double worst = 0.0;
  for (int draw = 0; draw < 10; ++draw) {
    lpcm::LstmParams p = lpcm::init_params(h, w, rng.next_u64());
    lpcm::PredictorContext ctx;
    int len = 1 + static_cast<int>(rng.next_below(8));
    for (int i = 0; i < len; ++i) {
      ctx.window.push_back(sp(rng.uniform(1.0, 60.0),
                              rng.uniform(-30.0, 30.0),
                              rng.uniform(-180.0, 180.0),
                              static_cast<int>(rng.next_below(4))));
    }
    ctx.current_r = rng.uniform(1.0, 60.0);
    ctx.current_phi = rng.uniform(-180.0, 180.0);
    ctx.laser_id = static_cast<int>(rng.next_below(4));
    ctx.laser_count = 4;
    double target = rng.uniform(-30.0, 30.0);

    std::vector<double> grad(p.values.size(), 0.0);
    lpcm::lstm_backward(p, ctx, target, grad);
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      double saved = p.values[i];
      p.values[i] = saved + eps;
      double up = lpcm::lstm_forward(p, ctx) - target;
      p.values[i] = saved - eps;
      double dn = lpcm::lstm_forward(p, ctx) - target;
      p.values[i] = saved;
      double fd = (up * up - dn * dn) / (2.0 * eps);
      double rel = std::abs(grad[i] - fd) /
                   std::max({std::abs(grad[i]), std::abs(fd), 1.0});
      worst = std::max(worst, rel);
    }
  }
  if (worst >= 1e-4) {
    return fail(fmt("worst relative gradient error %.3g >= 1e-4", worst));
  }
  return pass(fmt("10 draws x %zu parameters, worst relative error %.3g",
                  lpcm::LstmWeights::parameter_count(h), worst));
}

// --- criterion 5: predictor value ----------------------------------------

// Scene whose elevation rides a linear function of the radius (strong
// radius/elevation correlation): the recurrent predictor sees the current
// reconstructed radius through its fusion features, the previous-point
// rule cannot. The radius walk is deliberately rough, so copying the last
// elevation is a poor strategy and the correlation is worth learning.
TreeSet correlated_scene(TestRng& rng, int per_laser) {
  TreeSet set;
  for (int j = 0; j < 16; ++j) {
    PredictiveTree tree;
    tree.laser_id = j;
    double elev = -18.0 + 1.8 * j;
    double r = rng.uniform(8.0, 26.0);
    for (int i = 0; i < per_laser; ++i) {
      r = std::clamp(r + rng.uniform(-1.2, 1.2), 6.0, 28.0);
      double theta = elev + 0.35 * (r - 17.0) + rng.uniform(-0.02, 0.02);
      double phi = -179.0 + i * 0.25 + rng.uniform(-0.02, 0.02);
      tree.points.push_back(sp(r, theta, phi, j));
    }
    set.trees.push_back(std::move(tree));
  }
  return set;
}

Outcome criterion_predictor_value() {
  TestRng rng(0x5CE7ull);
  lpcm::HighRateConfig cfg;
  cfg.qp = QpVector{1, 2, 16, 130};
  cfg.phi_ar = 0.25;
  cfg.threads = 4;

  const int window = 8;
  TreeSet train_scene = correlated_scene(rng, 700);
  std::vector<lpcm::TrainSample> samples =
      lpcm::collect_train_samples(train_scene, cfg, window);

  lpcm::TrainConfig train_cfg;
  train_cfg.epochs = 40;
  train_cfg.batch_size = 256;
  train_cfg.learning_rate = 0.002;
  train_cfg.decay = 0.97;
  train_cfg.window = window;
  train_cfg.hidden = 8;
  lpcm::TrainReport report;
  auto start = std::chrono::steady_clock::now();  // train() is single-threaded
  lpcm::LstmWeights weights = lpcm::train(samples, train_cfg, 0xF17, &report);
  double train_s = seconds_since(start);
  if (train_s >= 600.0) {
    return fail(fmt("training took %.0f s >= 600 s", train_s));
  }

  TreeSet eval_scene = correlated_scene(rng, 700);
  auto delta_payloads =
      lpcm::encode_cloud_high(eval_scene, cfg, lpcm::delta_predictor());
  auto lstm_payloads =
      lpcm::encode_cloud_high(eval_scene, cfg, lpcm::lstm_predictor(weights));
  std::size_t delta_bytes =
      stream_bytes(delta_payloads, &lpcm::TreePayload::elevations);
  std::size_t lstm_bytes =
      stream_bytes(lstm_payloads, &lpcm::TreePayload::elevations);
  if (lstm_bytes >= delta_bytes) {
    return fail(fmt("elevation stream: lstm %zu B vs delta %zu B "
                    "(train mse %.4g -> %.4g)",
                    lstm_bytes, delta_bytes, report.epoch_mse.front(),
                    report.epoch_mse.back()));
  }
  return pass(fmt("elevation stream %zu B (lstm) < %zu B (delta), "
                  "%.1f%% saved, trained %.0f s",
                  lstm_bytes, delta_bytes,
                  100.0 * (1.0 - static_cast<double>(lstm_bytes) /
                                     static_cast<double>(delta_bytes)),
                  train_s));
}

// --- criterion 6: differential-evolution optimality proxy ----------------

Outcome criterion_de_proxy() {
  TestRng rng(0xDE20ull);
  std::vector<TreeSet> clouds;
  for (int c = 0; c < 20; ++c) {
    clouds.push_back(random_scan(rng, 2, 120, 0.4));
  }
  lpcm::EncoderSettings base;
  base.mode = lpcm::StreamMode::kHigh;
  base.phi_ar = 0.4;
  lpcm::FitnessEvaluator evaluator(clouds, base);

  auto random_qp = [](std::mt19937_64& gen) {
    QpVector qp;
    qp.q_delta = 1 + static_cast<int>(gen() % 256);
    qp.q_phi = 1 + static_cast<int>(gen() % 16);
    qp.q_theta = 1 + static_cast<int>(gen() % 256);
    qp.q_r = 1 + static_cast<int>(gen() % 256);
    return qp;
  };
  const double kInf = std::numeric_limits<double>::infinity();

  // Rate target: the 60th percentile of 100 random-vector rates.
  std::mt19937_64 gen(0x9E3779B97F4A7C15ull);
  std::vector<double> rates;
  for (int i = 0; i < 100; ++i) {
    rates.push_back(evaluator.evaluate(random_qp(gen), kInf).rate);
  }
  std::sort(rates.begin(), rates.end());
  double target = rates[59];

  // Baseline: the best of 200 uniformly random feasible vectors.
  double best_random = kInf;
  int feasible_count = 0;
  for (int i = 0; i < 200; ++i) {
    lpcm::Individual ind = evaluator.evaluate(random_qp(gen), target);
    if (ind.feasible) {
      ++feasible_count;
      best_random = std::min(best_random, ind.fitness);
    }
  }

  lpcm::DeConfig cfg;
  cfg.population = 10;
  cfg.generations = 50;
  cfg.seed = 77;
  cfg.target_rate = target;
  cfg.threads = 4;
  lpcm::DeResult result = lpcm::run_de(evaluator, cfg);
  if (!result.feasible) return fail("search found no feasible vector");
  if (result.best.fitness > best_random + 1e-12) {
    return fail(fmt("de fitness %.6g > best of %d random feasible %.6g",
                    result.best.fitness, feasible_count, best_random));
  }
  for (std::size_t g = 1; g < result.log.size(); ++g) {
    if (result.log[g].best_fitness > result.log[g - 1].best_fitness) {
      return fail(fmt("log fitness increased at generation %zu", g));
    }
  }

  // Rate constraint verified by independent re-encoding.
  double total_rate = 0.0;
  lpcm::EncoderSettings check = base;
  check.qp = result.best.qp;
  for (const TreeSet& cloud : clouds) {
    std::size_t bytes = serialized_bytes(cloud, check);
    total_rate += 8.0 * static_cast<double>(bytes) /
                  static_cast<double>(cloud.point_count());
  }
  double reencoded = total_rate / static_cast<double>(clouds.size());
  if (reencoded > target + 1e-9) {
    return fail(fmt("re-encoded rate %.6f exceeds target %.6f", reencoded,
                    target));
  }

  // Seeded rerun, fresh evaluator and serial evaluation: bit-identical.
  lpcm::FitnessEvaluator evaluator2(clouds, base);
  lpcm::DeConfig cfg2 = cfg;
  cfg2.threads = 1;
  lpcm::DeResult rerun = lpcm::run_de(evaluator2, cfg2);
  if (rerun.log.size() != result.log.size()) {
    return fail("rerun log length differs");
  }
  for (std::size_t g = 0; g < result.log.size(); ++g) {
    const lpcm::DeLogRow& a = result.log[g];
    const lpcm::DeLogRow& b = rerun.log[g];
    if (a.best_fitness != b.best_fitness || a.best_rate != b.best_rate ||
        a.qp.q_delta != b.qp.q_delta || a.qp.q_phi != b.qp.q_phi ||
        a.qp.q_theta != b.qp.q_theta || a.qp.q_r != b.qp.q_r) {
      return fail(fmt("rerun differs at generation %zu", g));
    }
  }
  return pass(fmt("fitness %.6g <= best of %d/200 random %.6g; rate %.4f <= "
                  "%.4f; rerun identical",
                  result.best.fitness, feasible_count, best_random, reencoded,
                  target));
}

// --- criteria 7 and 8: stream shares and mode crossover ------------------

Outcome criterion_stream_shares(const TreeSet& scan) {
  lpcm::HighRateConfig cfg;
  cfg.qp = QpVector{1, 1, 16, 16};
  cfg.phi_ar = 360.0 / 256;
  cfg.threads = 4;
  auto payloads = lpcm::encode_cloud_high(scan, cfg, lpcm::delta_predictor());
  double radius = static_cast<double>(
      stream_bytes(payloads, &lpcm::TreePayload::radii));
  double elevation = static_cast<double>(
      stream_bytes(payloads, &lpcm::TreePayload::elevations));
  double azimuth = static_cast<double>(
      stream_bytes(payloads, &lpcm::TreePayload::slopes) +
      stream_bytes(payloads, &lpcm::TreePayload::biases));
  double total = radius + elevation + azimuth;
  std::string split = fmt("r/theta/phi = %.1f%%/%.1f%%/%.1f%%",
                          100 * radius / total, 100 * elevation / total,
                          100 * azimuth / total);
  if (!(radius > elevation && elevation > azimuth)) {
    return fail("share ordering violated: " + split);
  }
  return pass(split + " (reference split 49.1/28.2/22.7)");
}

Outcome criterion_mode_crossover(const TreeSet& scan) {
  const double phi_ar = 360.0 / 256;
  auto sizes = [&](int q_theta, int q_r, double step) {
    lpcm::EncoderSettings high;
    high.mode = lpcm::StreamMode::kHigh;
    high.qp = QpVector{1, 1, q_theta, q_r};
    high.phi_ar = phi_ar;
    high.threads = 4;
    lpcm::EncoderSettings low = high;
    low.mode = lpcm::StreamMode::kLow;
    low.rd.step = step;
    return std::make_pair(serialized_bytes(scan, low),
                          serialized_bytes(scan, high));
  };

  // Matched distortion: identical q_theta, and radius step = 1/q_r.
  auto [low_coarse, high_coarse] = sizes(2, 2, 0.5);
  auto [low_fine, high_fine] = sizes(17, 17, 1.0 / 17);
  std::string detail =
      fmt("coarse low/high %zu/%zu B, fine low/high %zu/%zu B", low_coarse,
          high_coarse, low_fine, high_fine);
  if (!(low_coarse < high_coarse)) {
    return fail("low mode not cheaper at 0.25 deg distortion: " + detail);
  }
  if (!(high_fine < low_fine)) {
    return fail("high mode not cheaper at 0.03 deg distortion: " + detail);
  }
  return pass(detail);
}

// --- criterion 9: shipped QP table ---------------------------------------

Outcome criterion_qp_table() {
  struct Row {
    int point;
    lpcm::StreamMode mode;
    int q_phi, q_theta, q_r;
  };
  const Row rows[] = {
      {1, lpcm::StreamMode::kLow, 1, 1, 1},
      {2, lpcm::StreamMode::kLow, 1, 2, 1},
      {3, lpcm::StreamMode::kHigh, 2, 2, 12},
      {4, lpcm::StreamMode::kHigh, 2, 4, 28},
      {5, lpcm::StreamMode::kHigh, 3, 6, 40},
      {6, lpcm::StreamMode::kHigh, 4, 12, 81},
      {7, lpcm::StreamMode::kHigh, 8, 21, 130},
  };
  for (const Row& row : rows) {
    lpcm::RateConfig got = lpcm::default_qp(row.point);
    if (got.mode != row.mode || got.qp.q_delta != 1 ||
        got.qp.q_phi != row.q_phi || got.qp.q_theta != row.q_theta ||
        (row.mode == lpcm::StreamMode::kHigh && got.qp.q_r != row.q_r)) {
      return fail(fmt("rate point r%02d differs from the published table",
                      row.point));
    }
  }
  bool threw = false;
  try {
    lpcm::default_qp(8);
  } catch (const lpcm::ConfigError&) {
    threw = true;
  }
  if (!threw) return fail("rate point 8 did not throw");
  return pass("all seven rate points match; out-of-range rejected");
}

// --- criterion 10: real-data smoke test ----------------------------------

std::string find_kitti_scan() {
  if (const char* env = std::getenv("LPCM_KITTI_SCAN")) return env;
  std::error_code ec;
  std::filesystem::directory_iterator it(LPCM_KITTI_DIR, ec);
  if (ec) return "";
  std::vector<std::string> found;
  for (const auto& entry : it) {
    if (entry.path().extension() == ".bin") found.push_back(entry.path());
  }
  std::sort(found.begin(), found.end());
  return found.empty() ? "" : found.front();
}

Outcome criterion_kitti() {
  std::string path = find_kitti_scan();
  if (path.empty()) {
    return skip(fmt("no scan found (set LPCM_KITTI_SCAN or drop a .bin "
                    "under %s)",
                    LPCM_KITTI_DIR));
  }
  lpcm::PointCloud cloud = lpcm::read_kitti_bin(path);
  if (cloud.empty()) return fail("scan is empty: " + path);
  TreeSet set = lpcm::build_trees_threshold(cloud);
  std::vector<std::vector<double>> groups;
  for (const PredictiveTree& t : set.trees) {
    std::vector<double> phis;
    for (const SphericalPoint& p : t.points) phis.push_back(p.phi);
    groups.push_back(std::move(phis));
  }
  double phi_ar = lpcm::estimate_angular_resolution(groups);

  lpcm::RateConfig choice = lpcm::default_qp(3);
  lpcm::EncoderSettings enc;
  enc.mode = choice.mode;
  enc.qp = choice.qp;
  enc.rd = choice.rd;
  enc.phi_ar = phi_ar;
  enc.threads = 4;
  std::vector<std::uint8_t> bytes =
      lpcm::serialize_bitstream(lpcm::encode_cloud(set, enc));
  lpcm::DecoderSettings dec;
  dec.threads = 4;
  std::vector<SphericalPoint> decoded =
      lpcm::decode_cloud(lpcm::parse_bitstream(bytes), dec);
  std::vector<SphericalPoint> original = flatten_trees(set);
  if (decoded.size() != original.size()) return fail("point count changed");

  AxisErrors worst = worst_axis_errors(original, decoded);
  double unit = phi_ar / choice.qp.q_phi;
  const double tol = 1e-12;
  if (worst.phi > unit / 2 + tol || worst.theta > 0.5 / choice.qp.q_theta + tol ||
      worst.r > 0.5 / choice.qp.q_r + tol) {
    return fail(fmt("bounds violated: dphi %.4g dtheta %.4g dr %.4g",
                    worst.phi, worst.theta, worst.r));
  }
  double bpip = 8.0 * static_cast<double>(bytes.size()) /
                static_cast<double>(cloud.size());
  if (bpip >= 20.0) return fail(fmt("bpip %.2f >= 20", bpip));
  return pass(fmt("%zu points at r03: %.2f bpip, bounds hold (%s)",
                  cloud.size(), bpip,
                  std::filesystem::path(path).filename().c_str()));
}

}  // namespace

int main() {
  TestRng scene_rng(0xDE45ECull);
  TreeSet dense = dense_scan(scene_rng);

  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const Criterion criteria[] = {
      {"round-trip error bounds", criterion_roundtrip},
      {"distortion calculus", criterion_distortion_calculus},
      {"entropy coder efficiency", criterion_entropy},
      {"predictor gradients", criterion_gradients},
      {"trained predictor value", criterion_predictor_value},
      {"qp search optimality proxy", criterion_de_proxy},
      {"stream share ordering", [&] { return criterion_stream_shares(dense); }},
      {"mode crossover", [&] { return criterion_mode_crossover(dense); }},
      {"shipped qp table", criterion_qp_table},
      {"real-data smoke test", criterion_kitti},
  };

  int fails = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception& e) {
      outcome = fail(fmt("unexpected exception: %s", e.what()));
    }
    const char* verdict = outcome.verdict == Outcome::kPass   ? "PASS"
                          : outcome.verdict == Outcome::kSkip ? "SKIP"
                                                              : "FAIL";
    if (outcome.verdict == Outcome::kFail) ++fails;
    std::printf("criterion %2d  %-28s  %s  %s\n", index, c.name, verdict,
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  if (fails > 0) {
    std::printf("%d of 10 criteria failed\n", fails);
    return 1;
  }
  return 0;
}
