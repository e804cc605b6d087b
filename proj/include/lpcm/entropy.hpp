// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Adaptive binary arithmetic coding (range coder) with exponential-Golomb
// integer binarization, plus a Laplace rate model used by the matrix coder.

#ifndef LPCM_ENTROPY_HPP_
#define LPCM_ENTROPY_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace lpcm {

// Probability state for one adaptive binary symbol. The estimate is a 16-bit
// fixed-point P(bit == 1) scaled by 2^16, clamped to [1/512, 511/512]. The
// adaptation rate is scheduled on the symbol count: freshly created contexts
// move fast (shift 4) and settle to slow tracking (shift 8), which keeps the
// stationary redundancy low without a long warm-up penalty.
class BinaryContext {
 public:
  BinaryContext() = default;
  // Starts the estimate at the given probability instead of 1/2.
  explicit BinaryContext(double p_one);

  // Estimated P(bit == 1) in (0, 1).
  double p_one() const { return prob_ / 65536.0; }
  std::uint16_t state() const { return prob_; }

  // Moves the estimate toward the observed bit. Encoder and decoder must
  // call this in the same order to stay synchronized.
  void update(int bit);

  static constexpr std::uint16_t kMinProb = 128;    // 1/512
  static constexpr std::uint16_t kMaxProb = 65408;  // 511/512

 private:
  friend class RangeEncoder;
  friend class RangeDecoder;

  std::uint16_t prob_ = 1u << 15;
  std::uint8_t count_ = 0;
};

// Binary range encoder: 32-bit range, 64-bit low for carry propagation,
// renormalization below 2^24, five-byte flush.
class RangeEncoder {
 public:
  RangeEncoder() { out_.reserve(64); }

  void encode_bit(BinaryContext& ctx, int bit);
  void encode_bypass(int bit);
  // Encodes the low `count` bits of `value`, most significant first.
  void encode_bypass_bits(std::uint32_t value, int count);

  // Flushes pending state and returns the finished stream. The encoder must
  // not be used afterwards.
  std::vector<std::uint8_t> finish();

  // Bytes emitted so far, excluding the unflushed tail.
  std::size_t bytes_emitted() const { return out_.size(); }

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

// Matching decoder. Construction consumes the five initialization bytes;
// reading past the end of the buffer raises CorruptionError.
class RangeDecoder {
 public:
  RangeDecoder(const std::uint8_t* data, std::size_t size);
  explicit RangeDecoder(const std::vector<std::uint8_t>& data);

  int decode_bit(BinaryContext& ctx);
  int decode_bypass();
  std::uint32_t decode_bypass_bits(int count);

  std::size_t bytes_consumed() const { return pos_; }

 private:
  std::uint8_t next_byte();

  const std::uint8_t* data_ = nullptr;
  std::size_t size_ = 0;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

// Context set for signed-integer coding: unary prefix bins 0..15 of the
// order-0 exp-Golomb code, the suffix bits of the two shortest non-trivial
// codes, and the sign. Longer prefixes and deeper suffixes are bypass-coded.
struct IntContexts {
  std::array<BinaryContext, 16> prefix;
  BinaryContext suffix1;                  // one-bit suffix (magnitudes 1-2)
  std::array<BinaryContext, 2> suffix2;   // two-bit suffix (magnitudes 3-6)
  BinaryContext sign;

  // Seeds the contexts with the probabilities implied by a Laplace model
  // whose scale is `b_over_step` quantization steps. Useful when a payload
  // is too short for adaptation alone to reach the source statistics.
  void init_from_laplace(double b_over_step);
};

// Sign + order-0 exp-Golomb magnitude coding of a signed integer with
// |value| < 2^31. Exact round trip for any context initialization shared by
// encoder and decoder.
void encode_int(RangeEncoder& enc, IntContexts& ctx, std::int32_t value);
std::int32_t decode_int(RangeDecoder& dec, IntContexts& ctx);

// Laplace location/scale pair; scale is strictly positive.
struct LaplaceParams {
  double mu = 0.0;
  double b = 1e-6;
};

// Maximum-likelihood fit: mu = median, b = mean absolute deviation from the
// median, floored at 1e-6.
LaplaceParams fit_laplace(std::vector<double> values);

// Ideal code length, in bits, of the quantization bin of width `step`
// containing `value` under the Laplace model. Never negative; floored at
// 1e-9 bits so degenerate fits cannot report a zero rate.
double laplace_bits(double value, const LaplaceParams& params, double step);

}  // namespace lpcm

#endif  // LPCM_ENTROPY_HPP_
