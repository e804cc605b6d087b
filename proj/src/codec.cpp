// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpcm/codec.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "lpcm/detail/bytes.hpp"
#include "lpcm/errors.hpp"

namespace lpcm {

namespace {

constexpr std::uint8_t kVersion = 1;
constexpr char kMagic[4] = {'L', 'P', 'C', 'M'};

void write_stream(detail::ByteWriter& out, const std::vector<std::uint8_t>& s) {
  if (s.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInputError("payload stream exceeds the 32-bit length prefix");
  }
  out.u32(static_cast<std::uint32_t>(s.size()));
  out.bytes(s);
}

std::vector<std::uint8_t> read_stream(detail::ByteReader& in) {
  return in.bytes(in.u32());
}

void check_qp_field(int value, int max, const char* name) {
  if (value < 1 || value > max) {
    throw CorruptionError(std::string("header ") + name +
                          " outside its legal range");
  }
}

bool infer_skip_bias(const std::vector<TreePayload>& trees) {
  for (const TreePayload& t : trees) {
    if (!t.biases.empty()) return false;
  }
  return true;
}

}  // namespace

std::vector<std::uint8_t> serialize_bitstream(const Bitstream& bs) {
  detail::ByteWriter out;
  for (char c : kMagic) out.u8(static_cast<std::uint8_t>(c));
  out.u8(kVersion);
  out.u8(static_cast<std::uint8_t>(bs.mode));
  out.u16(static_cast<std::uint16_t>(bs.qp.q_delta));
  out.u16(static_cast<std::uint16_t>(bs.qp.q_phi));
  out.u16(static_cast<std::uint16_t>(bs.qp.q_theta));
  out.u16(static_cast<std::uint16_t>(bs.qp.q_r));
  out.f64(bs.radius_step);
  out.f64(bs.phi_ar);
  if (bs.calibration) {
    const auto& lasers = bs.calibration->lasers();
    if (lasers.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw InvalidInputError("calibration table exceeds 65535 lasers");
    }
    out.u8(1);
    out.u16(static_cast<std::uint16_t>(lasers.size()));
    for (const auto& laser : lasers) {
      out.f64(laser.elevation_deg);
      out.f64(laser.height_m);
    }
  } else {
    out.u8(0);
  }
  out.u64(bs.weight_checksum);

  if (bs.trees.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInputError("tree count exceeds the 32-bit header field");
  }
  out.u32(static_cast<std::uint32_t>(bs.trees.size()));
  for (const TreePayload& t : bs.trees) {
    if (t.laser_id < 0 ||
        t.laser_id > std::numeric_limits<std::uint16_t>::max()) {
      throw InvalidInputError("laser ID does not fit the u16 wire field");
    }
    out.u16(static_cast<std::uint16_t>(t.laser_id));
    out.u32(t.count);
    out.f64(t.root_r);
    out.f64(t.root_theta);
    out.f64(t.root_phi);
    write_stream(out, t.slopes);
    write_stream(out, t.biases);
    write_stream(out, t.radii);
    write_stream(out, t.elevations);
  }

  if (bs.mode == StreamMode::kLow) {
    if (bs.matrices.size() > std::numeric_limits<std::uint32_t>::max()) {
      throw InvalidInputError("matrix count exceeds the 32-bit header field");
    }
    out.u32(static_cast<std::uint32_t>(bs.matrices.size()));
    out.f64(bs.radius_step);
    for (const MatrixPayload& m : bs.matrices) out.u32(m.fill);
    for (const MatrixPayload& m : bs.matrices) {
      out.u32(static_cast<std::uint32_t>(m.center));
      out.f64(m.scale);
      write_stream(out, m.data);
    }
  }
  return out.take();
}

Bitstream parse_bitstream(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader in(bytes);
  for (char c : kMagic) {
    if (in.u8() != static_cast<std::uint8_t>(c)) {
      throw FormatError("not an LPCM bitstream (bad magic)");
    }
  }
  if (in.u8() != kVersion) throw FormatError("unsupported bitstream version");
  std::uint8_t mode_byte = in.u8();
  if (mode_byte > 2) throw FormatError("unsupported coding mode");

  Bitstream bs;
  bs.mode = static_cast<StreamMode>(mode_byte);
  bs.qp.q_delta = in.u16();
  bs.qp.q_phi = in.u16();
  bs.qp.q_theta = in.u16();
  bs.qp.q_r = in.u16();
  bs.radius_step = in.f64();
  bs.phi_ar = in.f64();

  check_qp_field(bs.qp.q_delta, 256, "q_delta");
  check_qp_field(bs.qp.q_phi, 16, "q_phi");
  check_qp_field(bs.qp.q_theta, 256, "q_theta");
  if (bs.mode == StreamMode::kLow) {
    if (bs.qp.q_r != 0) {
      throw CorruptionError("low-mode header must carry q_r = 0");
    }
    if (!(bs.radius_step > 0.0) || !std::isfinite(bs.radius_step)) {
      throw CorruptionError("low-mode header needs a positive radius step");
    }
  } else {
    check_qp_field(bs.qp.q_r, 256, "q_r");
    if (bs.radius_step != 0.0) {
      throw CorruptionError("high-mode header must carry radius step 0");
    }
  }
  if (!(bs.phi_ar > 0.0) || !std::isfinite(bs.phi_ar)) {
    throw CorruptionError("header azimuth resolution must be positive");
  }

  std::uint8_t calib_flag = in.u8();
  if (calib_flag > 1) throw CorruptionError("calibration flag must be 0 or 1");
  if (calib_flag == 1) {
    std::uint16_t laser_count = in.u16();
    if (laser_count == 0) {
      throw CorruptionError("calibration table must list at least one laser");
    }
    std::vector<LaserCalibration::Laser> lasers(laser_count);
    for (auto& laser : lasers) {
      laser.elevation_deg = in.f64();
      laser.height_m = in.f64();
    }
    try {
      bs.calibration.emplace(std::move(lasers));
    } catch (const ConfigError& e) {
      throw CorruptionError(std::string("calibration table invalid: ") +
                            e.what());
    }
  }
  bs.weight_checksum = in.u64();

  std::uint32_t tree_count = in.u32();
  bs.trees.resize(tree_count);
  for (TreePayload& t : bs.trees) {
    t.laser_id = in.u16();
    t.count = in.u32();
    if (t.count == 0) throw CorruptionError("tree record with zero points");
    t.root_r = in.f64();
    t.root_theta = in.f64();
    t.root_phi = in.f64();
    if (!std::isfinite(t.root_r) || !std::isfinite(t.root_theta) ||
        !std::isfinite(t.root_phi)) {
      throw CorruptionError("tree record with non-finite root coordinates");
    }
    t.slopes = read_stream(in);
    t.biases = read_stream(in);
    t.radii = read_stream(in);
    t.elevations = read_stream(in);
  }

  if (bs.mode == StreamMode::kLow) {
    std::uint32_t matrix_count = in.u32();
    double section_step = in.f64();
    if (section_step != bs.radius_step) {
      throw CorruptionError("matrix section step disagrees with the header");
    }
    bs.matrices.resize(matrix_count);
    for (MatrixPayload& m : bs.matrices) m.fill = in.u32();
    for (MatrixPayload& m : bs.matrices) {
      m.center = static_cast<std::int32_t>(in.u32());
      m.scale = in.f64();
      m.data = read_stream(in);
    }
  }

  if (in.remaining() != 0) {
    throw CorruptionError("trailing bytes after the bitstream");
  }
  return bs;
}

Bitstream encode_cloud(const TreeSet& set, const EncoderSettings& cfg) {
  Bitstream bs;
  bs.mode = cfg.mode;
  bs.phi_ar = cfg.phi_ar;
  bs.calibration = set.calib;

  switch (cfg.mode) {
    case StreamMode::kLow: {
      LowRateConfig low;
      low.qp = cfg.qp;
      low.qp.q_r = 1;  // unused by the mode; wire value stays 0
      low.phi_ar = cfg.phi_ar;
      low.skip_bias = cfg.skip_bias;
      low.rd = cfg.rd;
      low.threads = cfg.threads;
      LowRateEncoding enc = encode_cloud_low(set, low);
      bs.qp = low.qp;
      bs.qp.q_r = 0;
      bs.radius_step = enc.step;
      bs.trees = std::move(enc.trees);
      bs.matrices = std::move(enc.matrices);
      break;
    }
    case StreamMode::kHigh:
    case StreamMode::kHighLstm: {
      HighRateConfig high;
      high.qp = cfg.qp;
      high.phi_ar = cfg.phi_ar;
      high.skip_bias = cfg.skip_bias;
      high.threads = cfg.threads;
      ElevationPredictor predictor;
      if (cfg.mode == StreamMode::kHighLstm) {
        if (!cfg.weights) {
          throw ConfigError("LSTM coding mode needs a weight file");
        }
        predictor = lstm_predictor(*cfg.weights);
        bs.weight_checksum = cfg.weight_checksum;
      } else {
        predictor = delta_predictor();
      }
      bs.qp = high.qp;
      bs.trees = encode_cloud_high(set, high, predictor);
      break;
    }
  }
  return bs;
}

std::vector<SphericalPoint> decode_cloud(const Bitstream& bs,
                                         const DecoderSettings& cfg) {
  bool skip_bias = infer_skip_bias(bs.trees);
  switch (bs.mode) {
    case StreamMode::kLow: {
      LowRateEncoding enc;
      enc.trees = bs.trees;
      enc.matrices = bs.matrices;
      enc.step = bs.radius_step;
      LowRateConfig low;
      low.qp = bs.qp;
      low.qp.q_r = 1;  // wire value 0 stands for "unused"
      low.phi_ar = bs.phi_ar;
      low.skip_bias = skip_bias;
      low.rd.step = bs.radius_step;
      low.threads = cfg.threads;
      return decode_cloud_low(enc, low);
    }
    case StreamMode::kHigh:
    case StreamMode::kHighLstm: {
      HighRateConfig high;
      high.qp = bs.qp;
      high.phi_ar = bs.phi_ar;
      high.skip_bias = skip_bias;
      high.threads = cfg.threads;
      ElevationPredictor predictor;
      if (bs.mode == StreamMode::kHighLstm) {
        if (!cfg.weights) {
          throw ConfigError("this bitstream needs the LSTM weight file");
        }
        if (cfg.weight_checksum != bs.weight_checksum) {
          throw ConfigError(
              "weight file fingerprint does not match the bitstream");
        }
        predictor = lstm_predictor(*cfg.weights);
      } else {
        predictor = delta_predictor();
      }
      return decode_cloud_high(bs.trees, high, predictor);
    }
  }
  throw CorruptionError("unreachable coding mode");  // enum covered above
}

}  // namespace lpcm
