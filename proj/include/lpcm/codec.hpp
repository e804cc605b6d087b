// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0
//
// The normative bitstream container and the mode dispatch around it. A
// serialized stream is self-describing: everything the decoder needs is in
// the header except the LSTM weight file, which is referenced by a 64-bit
// fingerprint and travels out of band.

#ifndef LPCM_CODEC_HPP_
#define LPCM_CODEC_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "lpcm/geometry.hpp"
#include "lpcm/highrate.hpp"
#include "lpcm/lowrate.hpp"
#include "lpcm/predictor.hpp"
#include "lpcm/predtree.hpp"

namespace lpcm {

// Wire values of the header mode byte.
enum class StreamMode : std::uint8_t { kLow = 0, kHigh = 1, kHighLstm = 2 };

// In-memory form of one coded scan. On the wire (all little-endian):
//   magic "LPCM", version u8 (=1), mode u8,
//   q_delta/q_phi/q_theta/q_r u16 (q_r = 0 in low mode),
//   radius_step f64 (0 in high modes), phi_ar f64,
//   calibration flag u8 (+ laser count u16 and per-laser elevation/height
//   f64 pairs when present), weight fingerprint u64 (0 when unused),
//   tree count u32, then per tree: laser u16, count u32, three f64 roots,
//   and four u32-length-prefixed payload streams;
//   low mode appends a matrix section: count u32, step f64 (must repeat
//   radius_step), the fill counts u32 each, then per matrix center i32,
//   scale f64, and a u32-length-prefixed residual stream.
// This layout is normative; serialize/parse are exact inverses.
struct Bitstream {
  StreamMode mode = StreamMode::kHigh;
  QpVector qp;                        // q_r meaningful in high modes only
  double radius_step = 0.0;           // low-mode quantization step, meters
  double phi_ar = 0.2;                // native azimuth resolution, degrees
  std::optional<LaserCalibration> calibration;
  std::uint64_t weight_checksum = 0;  // FNV-1a64 of the weight file
  std::vector<TreePayload> trees;
  std::vector<MatrixPayload> matrices;  // low mode only
};

// Throws InvalidInputError when a field does not fit its wire type
// (laser IDs beyond u16, streams beyond u32 lengths).
std::vector<std::uint8_t> serialize_bitstream(const Bitstream& bs);

// Throws FormatError for unknown magic/version/mode and CorruptionError
// for truncation, trailing bytes, or internally inconsistent headers.
Bitstream parse_bitstream(const std::vector<std::uint8_t>& bytes);

// --- Mode dispatch -------------------------------------------------------

struct EncoderSettings {
  StreamMode mode = StreamMode::kHigh;
  QpVector qp;            // q_r ignored in low mode
  double phi_ar = 0.2;
  RdConfig rd;            // low mode: lambda and radius step
  bool skip_bias = true;
  int threads = 1;
  // kHighLstm only: the weights and the fingerprint of their file.
  std::shared_ptr<const LstmWeights> weights;
  std::uint64_t weight_checksum = 0;
};

struct DecoderSettings {
  int threads = 1;
  // kHighLstm only; the fingerprint must match the stream header.
  const LstmWeights* weights = nullptr;
  std::uint64_t weight_checksum = 0;
};

// Runs the mode selected in the settings over an already-built tree set
// and fills in a container. Throws ConfigError when kHighLstm is selected
// without weights.
Bitstream encode_cloud(const TreeSet& set, const EncoderSettings& cfg);

// Inverse dispatch driven entirely by the container header. Whether the
// bias streams were coded is inferred from the payloads (multi-point
// chains always flush at least the coder tail, so an all-empty bias
// column means the encoder skipped them). Throws ConfigError when the
// stream needs weights that were not supplied or whose fingerprint
// disagrees with the header.
std::vector<SphericalPoint> decode_cloud(const Bitstream& bs,
                                         const DecoderSettings& cfg);

}  // namespace lpcm

#endif  // LPCM_CODEC_HPP_
