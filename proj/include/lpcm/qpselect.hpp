// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Rate-constrained selection of the quantization vector: a differential
// evolution search over the integer QP box driven by encode/decode
// round trips on a small calibration set, plus the shipped per-rate-point
// defaults.

#ifndef LPCM_QPSELECT_HPP_
#define LPCM_QPSELECT_HPP_

#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <tuple>
#include <utility>
#include <vector>

#include "lpcm/codec.hpp"
#include "lpcm/highrate.hpp"
#include "lpcm/lowrate.hpp"
#include "lpcm/predtree.hpp"

namespace lpcm {

// Differential-evolution hyperparameters.
struct DeConfig {
  int population = 10;        // K
  double scale = 0.4;         // mu, mutation scale factor
  double crossover = 0.9;     // CR
  int generations = 50;       // T
  std::uint64_t seed = 1;
  double target_rate = 1.14;  // R_T, bits per input point
  int threads = 1;            // parallel trial evaluations
};

// Throws ConfigError unless population >= 4, scale in [0, 2],
// crossover in (0, 1], generations >= 1, and target_rate >= 0.
void validate_de(const DeConfig& cfg);

// One population member. Infeasible members (rate above the target) carry
// an infinite fitness so any feasible trial beats them on comparison.
struct Individual {
  QpVector qp;
  double fitness = std::numeric_limits<double>::infinity();
  double rate = 0.0;   // mean bits per input point over the set
  bool feasible = false;
};

// Encode/decode round trips over the calibration clouds at a candidate
// QP. Fitness is the summed per-cloud Cartesian MSE; rate is the mean
// serialized bits per input point. Results are cached per QP vector
// (the search revisits vectors constantly), so repeated evaluations are
// bit-identical and cheap. Thread-safe.
class FitnessEvaluator {
 public:
  // `base` fixes everything except the QP under test: mode, azimuth
  // resolution, low-mode radius step, predictor weights. Throws
  // ConfigError on an empty calibration set or empty member clouds.
  FitnessEvaluator(std::vector<TreeSet> clouds, EncoderSettings base);

  Individual evaluate(const QpVector& qp, double target_rate) const;

  // Number of cache-missing (actually coded) evaluations so far.
  std::size_t coded_evaluations() const;

 private:
  std::pair<double, double> measure(const QpVector& qp) const;

  std::vector<TreeSet> clouds_;
  std::vector<std::vector<CartesianPoint>> references_;
  EncoderSettings base_;
  mutable std::mutex mu_;
  mutable std::map<std::tuple<int, int, int, int>, std::pair<double, double>>
      cache_;
  mutable std::size_t coded_ = 0;
};

// K members with genes drawn uniformly from the legal box:
// q_delta/q_theta/q_r in [1, 256], q_phi in [1, 16]. Unevaluated.
std::vector<Individual> initialize_population(const DeConfig& cfg,
                                              std::mt19937_64& rng);

// Perturbs member j by the scaled difference of two other randomly chosen
// distinct members, rounds each gene to the nearest integer, and clamps
// into the legal box. Requires at least 4 members.
QpVector mutate(const std::vector<Individual>& population, std::size_t j,
                double scale, std::mt19937_64& rng);

// Binomial crossover: each gene comes from the mutant with probability
// `crossover`, from the target otherwise; one uniformly chosen gene is
// always taken from the mutant.
QpVector crossover(const QpVector& target, const QpVector& mutant,
                   double crossover, std::mt19937_64& rng);

// Greedy selection: the trial replaces the target only when it is
// feasible and strictly fitter. A feasible member is never displaced by
// an infeasible trial.
const Individual& select(const Individual& target, const Individual& trial);

// One convergence-log row: the best feasible member seen so far.
struct DeLogRow {
  int generation = 0;
  double best_fitness = std::numeric_limits<double>::infinity();
  double best_rate = 0.0;
  QpVector qp;
};

struct DeResult {
  bool feasible = false;  // whether any member ever met the rate target
  Individual best;        // best feasible member ever seen, when feasible
  std::vector<DeLogRow> log;  // generations 0..T, best fitness non-increasing
};

// Full search: seeded initialization, T generations of mutate/crossover/
// select. Random draws are sequential and independent of evaluation
// parallelism, so a rerun with the same seed is bit-identical.
DeResult run_de(const FitnessEvaluator& evaluator, const DeConfig& cfg);

// CSV emission of the convergence log (with header row).
void write_de_log(std::ostream& out, const std::vector<DeLogRow>& log);

// --- Shipped defaults ----------------------------------------------------

// Everything the CLI needs to encode at one of the seven named rate
// points: the coding mode, the QP vector, and (for the low-mode points)
// the radius coder settings.
struct RateConfig {
  StreamMode mode = StreamMode::kHigh;
  QpVector qp;
  RdConfig rd;  // low-mode points only
};

// The shipped QP table, indexed by rate point 1 (coarsest) through 7
// (finest). Low mode covers points 1-2, high mode 3-7; q_delta is 1
// everywhere. Throws ConfigError for anything outside 1..7.
RateConfig default_qp(int rate_point);

}  // namespace lpcm

#endif  // LPCM_QPSELECT_HPP_
