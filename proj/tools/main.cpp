// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface of the codec: encode/decode against the normative
// container, distortion evaluation, RD-curve emission, QP search, and
// predictor training. Exit codes: 0 success, 1 runtime failure, 2 format
// error, 3 configuration error, 4 corrupt bitstream, 5 rate target
// infeasible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lpcm/codec.hpp"
#include "lpcm/detail/bytes.hpp"
#include "lpcm/errors.hpp"
#include "lpcm/geometry.hpp"
#include "lpcm/io.hpp"
#include "lpcm/metrics.hpp"
#include "lpcm/predictor.hpp"
#include "lpcm/predtree.hpp"
#include "lpcm/qpselect.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitFormat = 2;
constexpr int kExitConfig = 3;
constexpr int kExitCorruption = 4;
constexpr int kExitInfeasible = 5;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// --- Shared flag bundles -------------------------------------------------

// How to turn a file into a tree set: calibrated when a table is given,
// azimuth-threshold segmentation otherwise.
struct TreeFlags {
  std::string calib_path;
  double threshold_deg = 180.0;
};

// Mode/QP resolution: a named rate point seeds everything, explicit flags
// override field by field.
struct CodingFlags {
  std::string mode;        // "", "high", "low", "high-lstm"
  std::string rate_point;  // "", "r01".."r07"
  std::vector<int> qp;     // empty or 4 values qd,qphi,qtheta,qr
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double step = std::numeric_limits<double>::quiet_NaN();
};

void add_tree_flags(CLI::App* cmd, TreeFlags& flags) {
  cmd->add_option("--calib", flags.calib_path,
                  "Laser calibration table (id elevation_deg height_m lines)");
  cmd->add_option("--threshold", flags.threshold_deg,
                  "Azimuth step starting a new chain when no calibration is "
                  "given, degrees")
      ->default_val("180");
}

void add_coding_flags(CLI::App* cmd, CodingFlags& flags) {
  cmd->add_option("--rate-point", flags.rate_point,
                  "Named rate point r01 (coarsest) .. r07 (finest)");
  cmd->add_option("--mode", flags.mode, "Coding mode")
      ->check(CLI::IsMember({"high", "low", "high-lstm"}));
  cmd->add_option("--qp", flags.qp,
                  "Explicit quantization parameters qdelta,qphi,qtheta,qr")
      ->delimiter(',')
      ->expected(4);
  cmd->add_option("--lambda", flags.lambda,
                  "Low mode: rate/distortion weight");
  cmd->add_option("--step", flags.step,
                  "Low mode: radius quantization step, meters");
}

int parse_rate_point(const std::string& text) {
  std::string digits = text;
  if (!digits.empty() && (digits[0] == 'r' || digits[0] == 'R')) {
    digits.erase(0, 1);
  }
  try {
    std::size_t used = 0;
    int n = std::stoi(digits, &used);
    if (used == digits.size()) return n;
  } catch (const std::exception&) {
  }
  throw lpcm::ConfigError("unrecognized rate point: " + text +
                          " (expected r01..r07)");
}

lpcm::RateConfig resolve_coding(const CodingFlags& flags) {
  lpcm::RateConfig choice;  // defaults: high mode, all-ones QP
  if (!flags.rate_point.empty()) {
    choice = lpcm::default_qp(parse_rate_point(flags.rate_point));
  }
  if (!flags.qp.empty()) {
    choice.qp = {flags.qp[0], flags.qp[1], flags.qp[2], flags.qp[3]};
  }
  if (flags.mode == "high") choice.mode = lpcm::StreamMode::kHigh;
  if (flags.mode == "low") choice.mode = lpcm::StreamMode::kLow;
  if (flags.mode == "high-lstm") choice.mode = lpcm::StreamMode::kHighLstm;
  if (!std::isnan(flags.lambda)) choice.rd.lambda = flags.lambda;
  if (!std::isnan(flags.step)) choice.rd.step = flags.step;
  return choice;
}

// --- Cloud and tree plumbing ---------------------------------------------

bool has_suffix(const std::string& path, const std::string& suffix) {
  if (path.size() < suffix.size()) return false;
  std::string tail = path.substr(path.size() - suffix.size());
  std::transform(tail.begin(), tail.end(), tail.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return tail == suffix;
}

lpcm::PointCloud load_cloud(const std::string& path, double scale) {
  lpcm::PointCloud cloud;
  if (has_suffix(path, ".bin")) {
    cloud = lpcm::read_kitti_bin(path);
  } else if (has_suffix(path, ".ply")) {
    cloud = lpcm::read_ply(path);
  } else {
    throw lpcm::FormatError("unknown point-cloud extension (want .bin or "
                            ".ply): " +
                            path);
  }
  if (scale != 1.0) {
    for (lpcm::CartesianPoint& p : cloud) {
      p.x *= scale;
      p.y *= scale;
      p.z *= scale;
    }
  }
  return cloud;
}

void store_cloud(const lpcm::PointCloud& cloud, const std::string& path,
                 bool ascii_ply) {
  if (has_suffix(path, ".bin")) {
    lpcm::write_kitti_bin(cloud, path);
  } else if (has_suffix(path, ".ply")) {
    lpcm::write_ply(cloud, path,
                    ascii_ply ? lpcm::PlyFormat::kAscii
                              : lpcm::PlyFormat::kBinaryLittleEndian);
  } else {
    throw lpcm::FormatError("unknown point-cloud extension (want .bin or "
                            ".ply): " +
                            path);
  }
}

lpcm::TreeSet make_trees(const lpcm::PointCloud& cloud,
                         const TreeFlags& flags) {
  if (!flags.calib_path.empty()) {
    return lpcm::build_trees_calibrated(
        cloud, lpcm::LaserCalibration::load(flags.calib_path));
  }
  return lpcm::build_trees_threshold(cloud, flags.threshold_deg);
}

// Library estimate over the per-chain azimuth runs; degenerate scans with
// no two-point chain fall back to the conventional 0.2 degrees.
double estimate_phi_ar(const lpcm::TreeSet& set) {
  std::vector<std::vector<double>> groups;
  groups.reserve(set.trees.size());
  for (const lpcm::PredictiveTree& tree : set.trees) {
    std::vector<double> phis;
    phis.reserve(tree.points.size());
    for (const lpcm::SphericalPoint& p : tree.points) phis.push_back(p.phi);
    groups.push_back(std::move(phis));
  }
  try {
    return lpcm::estimate_angular_resolution(groups);
  } catch (const lpcm::InvalidInputError&) {
    return 0.2;
  }
}

struct LoadedWeights {
  std::shared_ptr<const lpcm::LstmWeights> weights;
  std::uint64_t checksum = 0;
};

LoadedWeights load_weight_file(const std::string& path) {
  LoadedWeights out;
  std::vector<std::uint8_t> bytes = lpcm::read_file_bytes(path);
  out.checksum = lpcm::detail::fnv1a64(bytes.data(), bytes.size());
  out.weights = std::make_shared<const lpcm::LstmWeights>(
      lpcm::load_weights(path));
  return out;
}

lpcm::PointCloud to_cartesian(const std::vector<lpcm::SphericalPoint>& pts,
                              const lpcm::LaserCalibration* calib) {
  lpcm::PointCloud cloud;
  cloud.reserve(pts.size());
  for (const lpcm::SphericalPoint& s : pts) {
    cloud.push_back(lpcm::spherical_to_cartesian(s, calib));
  }
  return cloud;
}

// --- Stream accounting ---------------------------------------------------

struct StreamBits {
  std::size_t azimuth = 0;
  std::size_t elevation = 0;
  std::size_t radius = 0;
};

StreamBits count_stream_bits(const lpcm::Bitstream& bs) {
  StreamBits bits;
  for (const lpcm::TreePayload& t : bs.trees) {
    bits.azimuth += 8 * (t.slopes.size() + t.biases.size());
    bits.elevation += 8 * t.elevations.size();
    bits.radius += 8 * t.radii.size();
  }
  for (const lpcm::MatrixPayload& m : bs.matrices) {
    bits.radius += 8 * m.data.size();
  }
  return bits;
}

void print_breakdown(const lpcm::Bitstream& bs, std::size_t total_bytes,
                     std::size_t points) {
  StreamBits bits = count_stream_bits(bs);
  std::size_t coded = bits.azimuth + bits.elevation + bits.radius;
  std::size_t container = 8 * total_bytes - coded;
  auto share = [&](std::size_t b) {
    return coded == 0 ? 0.0 : 100.0 * static_cast<double>(b) /
                                  static_cast<double>(coded);
  };
  std::printf("bitstream bytes   %zu\n", total_bytes);
  if (points > 0) {
    std::printf("bpip              %.4f\n",
                8.0 * static_cast<double>(total_bytes) /
                    static_cast<double>(points));
  }
  std::printf("azimuth bits      %zu  (%.1f%%)\n", bits.azimuth,
              share(bits.azimuth));
  std::printf("elevation bits    %zu  (%.1f%%)\n", bits.elevation,
              share(bits.elevation));
  std::printf("radius bits       %zu  (%.1f%%)\n", bits.radius,
              share(bits.radius));
  std::printf("container bits    %zu\n", container);
}

const char* mode_name(lpcm::StreamMode mode) {
  switch (mode) {
    case lpcm::StreamMode::kLow:
      return "low";
    case lpcm::StreamMode::kHigh:
      return "high";
    case lpcm::StreamMode::kHighLstm:
      return "high-lstm";
  }
  return "?";
}

// --- encode --------------------------------------------------------------

struct EncodeOptions {
  std::string input;
  std::string output;
  TreeFlags trees;
  CodingFlags coding;
  std::string weights_path;
  double phi_ar = std::numeric_limits<double>::quiet_NaN();
  double scale = 1.0;
  bool code_bias = false;
  int threads = 1;
};

int run_encode(const EncodeOptions& opt) {
  lpcm::PointCloud cloud = load_cloud(opt.input, opt.scale);
  lpcm::TreeSet set = make_trees(cloud, opt.trees);

  lpcm::RateConfig choice = resolve_coding(opt.coding);
  lpcm::EncoderSettings settings;
  settings.mode = choice.mode;
  settings.qp = choice.qp;
  settings.rd = choice.rd;
  settings.skip_bias = !opt.code_bias;
  settings.threads = opt.threads;
  bool estimated = std::isnan(opt.phi_ar);
  settings.phi_ar = estimated ? estimate_phi_ar(set) : opt.phi_ar;
  if (settings.mode == lpcm::StreamMode::kHighLstm) {
    if (opt.weights_path.empty()) {
      throw lpcm::ConfigError("--mode high-lstm requires --weights");
    }
    LoadedWeights lw = load_weight_file(opt.weights_path);
    settings.weights = lw.weights;
    settings.weight_checksum = lw.checksum;
  }

  auto start = std::chrono::steady_clock::now();
  lpcm::Bitstream bs = lpcm::encode_cloud(set, settings);
  std::vector<std::uint8_t> bytes = lpcm::serialize_bitstream(bs);
  double elapsed = seconds_since(start);
  lpcm::write_file_bytes(opt.output, bytes);

  std::printf("input points      %zu\n", cloud.size());
  std::printf("trees             %zu\n", set.trees.size());
  std::printf("mode              %s\n", mode_name(settings.mode));
  std::printf("qp                %d,%d,%d,%d\n", settings.qp.q_delta,
              settings.qp.q_phi, settings.qp.q_theta,
              settings.mode == lpcm::StreamMode::kLow ? 0 : settings.qp.q_r);
  if (settings.mode == lpcm::StreamMode::kLow) {
    std::printf("radius step       %g m\n", settings.rd.step);
  }
  std::printf("phi_ar            %.6f deg%s\n", settings.phi_ar,
              estimated ? " (estimated)" : "");
  print_breakdown(bs, bytes.size(), cloud.size());
  std::printf("encode time       %.3f s\n", elapsed);
  return 0;
}

// --- decode --------------------------------------------------------------

struct DecodeOptions {
  std::string input;
  std::string output;
  std::string weights_path;
  double scale = 1.0;
  bool ascii_ply = false;
  int threads = 1;
};

int run_decode(const DecodeOptions& opt) {
  std::vector<std::uint8_t> bytes = lpcm::read_file_bytes(opt.input);
  auto start = std::chrono::steady_clock::now();
  lpcm::Bitstream bs = lpcm::parse_bitstream(bytes);

  lpcm::DecoderSettings settings;
  settings.threads = opt.threads;
  LoadedWeights lw;
  if (bs.mode == lpcm::StreamMode::kHighLstm) {
    if (opt.weights_path.empty()) {
      throw lpcm::ConfigError(
          "bitstream was coded with the recurrent predictor; pass the "
          "matching --weights file");
    }
    lw = load_weight_file(opt.weights_path);
    settings.weights = lw.weights.get();
    settings.weight_checksum = lw.checksum;
  }

  std::vector<lpcm::SphericalPoint> spherical = lpcm::decode_cloud(bs, settings);
  const lpcm::LaserCalibration* calib =
      bs.calibration ? &*bs.calibration : nullptr;
  lpcm::PointCloud cloud = to_cartesian(spherical, calib);
  double elapsed = seconds_since(start);
  if (opt.scale != 1.0) {
    for (lpcm::CartesianPoint& p : cloud) {
      p.x /= opt.scale;
      p.y /= opt.scale;
      p.z /= opt.scale;
    }
  }
  store_cloud(cloud, opt.output, opt.ascii_ply);
  std::printf("decoded points    %zu\n", cloud.size());
  std::printf("mode              %s\n", mode_name(bs.mode));
  std::printf("decode time       %.3f s\n", elapsed);
  return 0;
}

// --- eval ----------------------------------------------------------------

constexpr const char* kRdHeader =
    "label,bpip,d1_psnr_db,d2_psnr_db,chamfer_m2,encode_s,decode_s";

struct RdRow {
  std::string label;
  double bpip = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double cd = 0.0;
  double encode_s = 0.0;
  double decode_s = 0.0;
};

std::string format_rd_row(const RdRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.9g,%.3f,%.3f",
                row.label.c_str(), row.bpip, row.d1, row.d2, row.cd,
                row.encode_s, row.decode_s);
  return buf;
}

RdRow measure_pair(const lpcm::PointCloud& reference,
                   const lpcm::PointCloud& test, double peak,
                   unsigned threads) {
  RdRow row;
  row.d1 = lpcm::d1_psnr(reference, test, peak, threads);
  row.d2 = lpcm::d2_psnr(reference, test, peak, 9, threads);
  row.cd = lpcm::chamfer_distance(reference, test, threads);
  return row;
}

struct EvalOptions {
  std::string reference;
  std::string test;
  std::string bitstream_path;
  std::string label = "custom";
  double peak = std::numeric_limits<double>::quiet_NaN();
  double scale = 1.0;
  bool header = false;
  int threads = 1;
};

int run_eval(const EvalOptions& opt) {
  lpcm::PointCloud reference = load_cloud(opt.reference, opt.scale);
  lpcm::PointCloud test = load_cloud(opt.test, opt.scale);
  double peak = std::isnan(opt.peak) ? lpcm::bounding_box_diagonal(reference)
                                     : opt.peak;
  RdRow row = measure_pair(reference, test, peak,
                           static_cast<unsigned>(std::max(1, opt.threads)));
  row.label = opt.label;
  if (!opt.bitstream_path.empty() && !reference.empty()) {
    std::vector<std::uint8_t> bytes =
        lpcm::read_file_bytes(opt.bitstream_path);
    row.bpip = 8.0 * static_cast<double>(bytes.size()) /
               static_cast<double>(reference.size());
  }
  if (opt.scale != 1.0) {
    std::printf("# scale %.9g (metrics in meters)\n", opt.scale);
  }
  if (opt.header) std::printf("%s\n", kRdHeader);
  std::printf("%s\n", format_rd_row(row).c_str());
  return 0;
}

// --- rd-curve ------------------------------------------------------------

struct RdCurveOptions {
  std::vector<std::string> inputs;
  std::string output_csv;
  std::vector<std::string> rate_points;
  TreeFlags trees;
  std::string weights_path;
  double phi_ar = std::numeric_limits<double>::quiet_NaN();
  double peak = std::numeric_limits<double>::quiet_NaN();
  double scale = 1.0;
  int threads = 1;
};

int run_rd_curve(const RdCurveOptions& opt) {
  std::vector<std::string> points = opt.rate_points;
  if (points.empty()) {
    points = {"r01", "r02", "r03", "r04", "r05", "r06", "r07"};
  }
  LoadedWeights lw;
  if (!opt.weights_path.empty()) lw = load_weight_file(opt.weights_path);

  std::ostringstream csv;
  csv << kRdHeader << "\n";
  for (const std::string& input : opt.inputs) {
    lpcm::PointCloud cloud = load_cloud(input, opt.scale);
    lpcm::TreeSet set = make_trees(cloud, opt.trees);
    double phi_ar = std::isnan(opt.phi_ar) ? estimate_phi_ar(set) : opt.phi_ar;
    double peak = std::isnan(opt.peak) ? lpcm::bounding_box_diagonal(cloud)
                                       : opt.peak;
    std::string stem = std::filesystem::path(input).stem().string();

    for (const std::string& point : points) {
      lpcm::RateConfig choice = lpcm::default_qp(parse_rate_point(point));
      lpcm::EncoderSettings settings;
      settings.mode = choice.mode;
      settings.qp = choice.qp;
      settings.rd = choice.rd;
      settings.phi_ar = phi_ar;
      settings.threads = opt.threads;
      if (choice.mode == lpcm::StreamMode::kHigh && lw.weights) {
        settings.mode = lpcm::StreamMode::kHighLstm;
        settings.weights = lw.weights;
        settings.weight_checksum = lw.checksum;
      }

      auto enc_start = std::chrono::steady_clock::now();
      lpcm::Bitstream bs = lpcm::encode_cloud(set, settings);
      std::vector<std::uint8_t> bytes = lpcm::serialize_bitstream(bs);
      double enc_s = seconds_since(enc_start);

      lpcm::DecoderSettings ds;
      ds.threads = opt.threads;
      ds.weights = lw.weights.get();
      ds.weight_checksum = lw.checksum;
      auto dec_start = std::chrono::steady_clock::now();
      lpcm::Bitstream parsed = lpcm::parse_bitstream(bytes);
      std::vector<lpcm::SphericalPoint> spherical =
          lpcm::decode_cloud(parsed, ds);
      const lpcm::LaserCalibration* calib =
          parsed.calibration ? &*parsed.calibration : nullptr;
      lpcm::PointCloud decoded = to_cartesian(spherical, calib);
      double dec_s = seconds_since(dec_start);

      RdRow row = measure_pair(cloud, decoded, peak,
                               static_cast<unsigned>(std::max(1, opt.threads)));
      row.label = opt.inputs.size() > 1 ? stem + ":" + point : point;
      row.bpip = cloud.empty() ? 0.0
                               : 8.0 * static_cast<double>(bytes.size()) /
                                     static_cast<double>(cloud.size());
      row.encode_s = enc_s;
      row.decode_s = dec_s;
      csv << format_rd_row(row) << "\n";
    }
  }

  std::string text = csv.str();
  if (opt.output_csv.empty()) {
    std::printf("%s", text.c_str());
  } else {
    lpcm::write_file_bytes(opt.output_csv,
                           std::vector<std::uint8_t>(text.begin(), text.end()));
    std::printf("wrote %s\n", opt.output_csv.c_str());
  }
  return 0;
}

// --- optimize-qp ---------------------------------------------------------

struct OptimizeOptions {
  std::vector<std::string> inputs;
  TreeFlags trees;
  std::string mode = "high";
  std::string weights_path;
  std::string log_path = "de_log.csv";
  double target_rate = 1.14;
  double phi_ar = std::numeric_limits<double>::quiet_NaN();
  double lambda = 0.6;
  double step = 0.1;
  double scale = 1.0;
  int population = 10;
  double de_scale = 0.4;
  double crossover = 0.9;
  int generations = 50;
  std::uint64_t seed = 1;
  int threads = 1;
};

int run_optimize(const OptimizeOptions& opt) {
  std::vector<lpcm::TreeSet> clouds;
  clouds.reserve(opt.inputs.size());
  for (const std::string& input : opt.inputs) {
    clouds.push_back(make_trees(load_cloud(input, opt.scale), opt.trees));
  }
  if (clouds.empty()) throw lpcm::ConfigError("no calibration clouds given");

  lpcm::EncoderSettings base;
  base.mode = opt.mode == "low" ? lpcm::StreamMode::kLow
              : opt.mode == "high-lstm" ? lpcm::StreamMode::kHighLstm
                                        : lpcm::StreamMode::kHigh;
  base.rd.lambda = opt.lambda;
  base.rd.step = opt.step;
  base.threads = opt.threads;
  if (std::isnan(opt.phi_ar)) {
    base.phi_ar = estimate_phi_ar(clouds.front());
  } else {
    base.phi_ar = opt.phi_ar;
  }
  if (base.mode == lpcm::StreamMode::kHighLstm) {
    if (opt.weights_path.empty()) {
      throw lpcm::ConfigError("--mode high-lstm requires --weights");
    }
    LoadedWeights lw = load_weight_file(opt.weights_path);
    base.weights = lw.weights;
    base.weight_checksum = lw.checksum;
  }

  lpcm::FitnessEvaluator evaluator(std::move(clouds), base);
  lpcm::DeConfig cfg;
  cfg.population = opt.population;
  cfg.scale = opt.de_scale;
  cfg.crossover = opt.crossover;
  cfg.generations = opt.generations;
  cfg.seed = opt.seed;
  cfg.target_rate = opt.target_rate;
  cfg.threads = opt.threads;

  lpcm::DeResult result = lpcm::run_de(evaluator, cfg);

  std::ostringstream log;
  lpcm::write_de_log(log, result.log);
  std::string text = log.str();
  lpcm::write_file_bytes(opt.log_path,
                         std::vector<std::uint8_t>(text.begin(), text.end()));
  std::printf("convergence log   %s\n", opt.log_path.c_str());
  std::printf("coded evaluations %zu\n", evaluator.coded_evaluations());

  if (!result.feasible) {
    std::fprintf(stderr,
                 "no QP vector met the rate target %.4f bpip; try a larger "
                 "target or low mode\n",
                 opt.target_rate);
    return kExitInfeasible;
  }
  const lpcm::Individual& best = result.best;
  std::printf("q*                %d,%d,%d,%d\n", best.qp.q_delta,
              best.qp.q_phi, best.qp.q_theta, best.qp.q_r);
  std::printf("fitness           %.9g\n", best.fitness);
  std::printf("rate              %.6f bpip (target %.6f)\n", best.rate,
              opt.target_rate);
  return 0;
}

// --- train ---------------------------------------------------------------

struct TrainOptions {
  std::vector<std::string> inputs;
  std::string output;
  TreeFlags trees;
  CodingFlags coding;
  double phi_ar = std::numeric_limits<double>::quiet_NaN();
  double scale = 1.0;
  int epochs = 50;
  int batch = 256;
  double lr = 0.001;
  double decay = 0.99;
  int window = 50;
  int hidden = 64;
  std::uint64_t seed = 1;
  int threads = 1;
};

int run_train(const TrainOptions& opt) {
  lpcm::RateConfig choice = resolve_coding(opt.coding);
  std::vector<lpcm::TrainSample> samples;
  for (const std::string& input : opt.inputs) {
    lpcm::PointCloud cloud = load_cloud(input, opt.scale);
    lpcm::TreeSet set = make_trees(cloud, opt.trees);
    lpcm::HighRateConfig cfg;
    cfg.qp = choice.qp;
    cfg.phi_ar = std::isnan(opt.phi_ar) ? estimate_phi_ar(set) : opt.phi_ar;
    cfg.threads = opt.threads;
    std::vector<lpcm::TrainSample> part =
        lpcm::collect_train_samples(set, cfg, opt.window);
    samples.insert(samples.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  }
  if (samples.empty()) {
    throw lpcm::ConfigError("training clouds produced no contexts");
  }

  lpcm::TrainConfig cfg;
  cfg.epochs = opt.epochs;
  cfg.batch_size = opt.batch;
  cfg.learning_rate = opt.lr;
  cfg.decay = opt.decay;
  cfg.window = opt.window;
  cfg.hidden = opt.hidden;

  auto start = std::chrono::steady_clock::now();
  lpcm::TrainReport report;
  lpcm::LstmWeights weights = lpcm::train(samples, cfg, opt.seed, &report);
  double elapsed = seconds_since(start);
  lpcm::save_weights(weights, opt.output);

  std::vector<std::uint8_t> bytes = lpcm::read_file_bytes(opt.output);
  std::printf("training samples  %zu\n", samples.size());
  if (!report.epoch_mse.empty()) {
    std::printf("first epoch mse   %.9g deg^2\n", report.epoch_mse.front());
    std::printf("final epoch mse   %.9g deg^2\n", report.epoch_mse.back());
  }
  std::printf("training time     %.1f s\n", elapsed);
  std::printf("weights           %s\n", opt.output.c_str());
  std::printf("fingerprint       %016llx\n",
              static_cast<unsigned long long>(
                  lpcm::detail::fnv1a64(bytes.data(), bytes.size())));
  return 0;
}

// --- dispatch ------------------------------------------------------------

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const lpcm::FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kExitFormat;
  } catch (const lpcm::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const lpcm::CorruptionError& e) {
    std::fprintf(stderr, "corrupt bitstream: %s\n", e.what());
    return kExitCorruption;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "lpcm: predictive-tree LiDAR point-cloud geometry codec\n"
      "Clouds are read by extension: .bin (KITTI float quadruples) or .ply."};
  app.require_subcommand(1);

  EncodeOptions enc;
  CLI::App* enc_cmd =
      app.add_subcommand("encode", "Compress a scan into a bitstream");
  enc_cmd->add_option("input", enc.input, "Input cloud (.bin/.ply)")
      ->required();
  enc_cmd->add_option("output", enc.output, "Output bitstream")->required();
  add_tree_flags(enc_cmd, enc.trees);
  add_coding_flags(enc_cmd, enc.coding);
  enc_cmd->add_option("--weights", enc.weights_path,
                      "Recurrent predictor weight file (high-lstm mode)");
  enc_cmd->add_option("--phi-ar", enc.phi_ar,
                      "Native azimuth resolution, degrees (default: "
                      "estimated from the scan)");
  enc_cmd->add_option("--scale", enc.scale,
                      "Multiply input coordinates to convert them to meters");
  enc_cmd->add_flag("--code-bias", enc.code_bias,
                    "Code per-point azimuth biases instead of skipping them");
  enc_cmd->add_option("--threads", enc.threads, "Worker threads");

  DecodeOptions dec;
  CLI::App* dec_cmd =
      app.add_subcommand("decode", "Reconstruct a cloud from a bitstream");
  dec_cmd->add_option("input", dec.input, "Input bitstream")->required();
  dec_cmd->add_option("output", dec.output, "Output cloud (.bin/.ply)")
      ->required();
  dec_cmd->add_option("--weights", dec.weights_path,
                      "Weight file matching the stream's fingerprint");
  dec_cmd->add_option("--scale", dec.scale,
                      "Divide output coordinates (inverse of encode --scale)");
  dec_cmd->add_flag("--ascii", dec.ascii_ply,
                    "Write ASCII PLY instead of binary");
  dec_cmd->add_option("--threads", dec.threads, "Worker threads");

  EvalOptions ev;
  CLI::App* ev_cmd = app.add_subcommand(
      "eval", "Distortion metrics between a reference and a decoded cloud");
  ev_cmd->add_option("reference", ev.reference, "Reference cloud")->required();
  ev_cmd->add_option("test", ev.test, "Decoded cloud")->required();
  ev_cmd->add_option("--bitstream", ev.bitstream_path,
                     "Bitstream whose size yields bits per input point");
  ev_cmd->add_option("--label", ev.label, "Rate label for the CSV row");
  ev_cmd->add_option("--peak", ev.peak,
                     "PSNR peak, meters (default: reference bounding-box "
                     "diagonal)");
  ev_cmd->add_option("--scale", ev.scale,
                     "Multiply both clouds to convert them to meters");
  ev_cmd->add_flag("--header", ev.header, "Print the CSV header line first");
  ev_cmd->add_option("--threads", ev.threads, "Worker threads");

  RdCurveOptions rd;
  CLI::App* rd_cmd = app.add_subcommand(
      "rd-curve", "Encode/decode/evaluate inputs across the rate points");
  rd_cmd->add_option("inputs", rd.inputs, "Input clouds")->required();
  rd_cmd->add_option("--output", rd.output_csv,
                     "CSV destination (default: stdout)");
  rd_cmd->add_option("--rate-points", rd.rate_points,
                     "Subset of rate points (default: r01..r07)")
      ->delimiter(',');
  add_tree_flags(rd_cmd, rd.trees);
  rd_cmd->add_option("--weights", rd.weights_path,
                     "Use the recurrent predictor at the high-rate points");
  rd_cmd->add_option("--phi-ar", rd.phi_ar, "Native azimuth resolution");
  rd_cmd->add_option("--peak", rd.peak, "PSNR peak, meters");
  rd_cmd->add_option("--scale", rd.scale, "Input unit conversion to meters");
  rd_cmd->add_option("--threads", rd.threads, "Worker threads");

  OptimizeOptions de;
  CLI::App* de_cmd = app.add_subcommand(
      "optimize-qp",
      "Differential-evolution QP search under a rate constraint");
  de_cmd->add_option("inputs", de.inputs, "Calibration clouds")->required();
  add_tree_flags(de_cmd, de.trees);
  de_cmd->add_option("--target-rate", de.target_rate,
                     "Rate constraint, bits per input point");
  de_cmd->add_option("--mode", de.mode, "Coding mode under optimization")
      ->check(CLI::IsMember({"high", "low", "high-lstm"}));
  de_cmd->add_option("--weights", de.weights_path,
                     "Weight file for high-lstm mode");
  de_cmd->add_option("--log", de.log_path, "Convergence CSV path");
  de_cmd->add_option("--phi-ar", de.phi_ar, "Native azimuth resolution");
  de_cmd->add_option("--lambda", de.lambda, "Low mode: RD weight");
  de_cmd->add_option("--step", de.step, "Low mode: radius step, meters");
  de_cmd->add_option("--scale", de.scale, "Input unit conversion to meters");
  de_cmd->add_option("--population", de.population, "Population size K");
  de_cmd->add_option("--de-scale", de.de_scale, "Mutation scale factor");
  de_cmd->add_option("--crossover", de.crossover, "Crossover rate CR");
  de_cmd->add_option("--generations", de.generations, "Generations T");
  de_cmd->add_option("--seed", de.seed, "Search seed");
  de_cmd->add_option("--threads", de.threads, "Parallel trial evaluations");

  TrainOptions tr;
  tr.coding.rate_point = "r05";  // contexts match a mid-table coding QP
  CLI::App* tr_cmd = app.add_subcommand(
      "train", "Train the recurrent elevation predictor on scans");
  tr_cmd->add_option("inputs", tr.inputs, "Training clouds")->required();
  tr_cmd->add_option("--output", tr.output, "Weight file to write")
      ->required();
  add_tree_flags(tr_cmd, tr.trees);
  add_coding_flags(tr_cmd, tr.coding);
  tr_cmd->add_option("--phi-ar", tr.phi_ar, "Native azimuth resolution");
  tr_cmd->add_option("--scale", tr.scale, "Input unit conversion to meters");
  tr_cmd->add_option("--epochs", tr.epochs, "Training epochs");
  tr_cmd->add_option("--batch", tr.batch, "Minibatch size");
  tr_cmd->add_option("--lr", tr.lr, "Initial learning rate");
  tr_cmd->add_option("--decay", tr.decay, "Per-epoch learning-rate decay");
  tr_cmd->add_option("--window", tr.window, "Context window length");
  tr_cmd->add_option("--hidden", tr.hidden, "Hidden state width");
  tr_cmd->add_option("--seed", tr.seed, "Initialization/shuffle seed");
  tr_cmd->add_option("--threads", tr.threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*enc_cmd) return run_guarded([&] { return run_encode(enc); });
  if (*dec_cmd) return run_guarded([&] { return run_decode(dec); });
  if (*ev_cmd) return run_guarded([&] { return run_eval(ev); });
  if (*rd_cmd) return run_guarded([&] { return run_rd_curve(rd); });
  if (*de_cmd) return run_guarded([&] { return run_optimize(de); });
  if (*tr_cmd) return run_guarded([&] { return run_train(tr); });
  return kExitRuntime;
}
