// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpcm/entropy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "lpcm/errors.hpp"

namespace lpcm {

namespace {

constexpr std::uint32_t kTopValue = 1u << 24;

std::uint16_t clamp_prob(std::uint32_t p) {
  if (p < BinaryContext::kMinProb) return BinaryContext::kMinProb;
  if (p > BinaryContext::kMaxProb) return BinaryContext::kMaxProb;
  return static_cast<std::uint16_t>(p);
}

// Adaptation shift schedule: fast while the context is young, slow once it
// has seen enough symbols for the estimate to be trustworthy.
int shift_for_count(std::uint8_t count) {
  if (count < 16) return 4;
  if (count < 32) return 5;
  if (count < 64) return 6;
  if (count < 128) return 7;
  return 8;
}

}  // namespace

BinaryContext::BinaryContext(double p_one) {
  double scaled = p_one * 65536.0;
  std::uint32_t p = scaled <= 0.0 ? 0 : static_cast<std::uint32_t>(std::lround(scaled));
  prob_ = clamp_prob(p);
}

void BinaryContext::update(int bit) {
  int shift = shift_for_count(count_);
  std::uint32_t p = prob_;
  if (bit) {
    p += (65536u - p) >> shift;
  } else {
    p -= p >> shift;
  }
  prob_ = clamp_prob(p);
  if (count_ < 128) ++count_;
}

void RangeEncoder::shift_low() {
  // Classic carry-propagating byte output: bytes are held back while they
  // could still be incremented by a carry out of the 32-bit low part.
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    std::uint8_t carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t byte = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(byte + carry));
      byte = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(static_cast<std::uint32_t>(low_) >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode_bit(BinaryContext& ctx, int bit) {
  std::uint32_t bound = (range_ >> 16) * ctx.prob_;
  if (bit) {
    range_ = bound;
  } else {
    low_ += bound;
    range_ -= bound;
  }
  ctx.update(bit);
  while (range_ < kTopValue) {
    shift_low();
    range_ <<= 8;
  }
}

void RangeEncoder::encode_bypass(int bit) {
  std::uint32_t bound = range_ >> 1;
  if (bit) {
    range_ = bound;
  } else {
    low_ += bound;
    range_ -= bound;
  }
  while (range_ < kTopValue) {
    shift_low();
    range_ <<= 8;
  }
}

void RangeEncoder::encode_bypass_bits(std::uint32_t value, int count) {
  for (int i = count - 1; i >= 0; --i) {
    encode_bypass(static_cast<int>((value >> i) & 1u));
  }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(const std::uint8_t* data, std::size_t size)
    : data_(data), size_(size) {
  for (int i = 0; i < 5; ++i) {
    code_ = (code_ << 8) | next_byte();
  }
}

RangeDecoder::RangeDecoder(const std::vector<std::uint8_t>& data)
    : RangeDecoder(data.data(), data.size()) {}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= size_) {
    std::ostringstream msg;
    msg << "entropy stream truncated at byte " << pos_ << " of " << size_;
    throw CorruptionError(msg.str());
  }
  return data_[pos_++];
}

int RangeDecoder::decode_bit(BinaryContext& ctx) {
  std::uint32_t bound = (range_ >> 16) * ctx.prob_;
  int bit;
  if (code_ < bound) {
    bit = 1;
    range_ = bound;
  } else {
    bit = 0;
    code_ -= bound;
    range_ -= bound;
  }
  ctx.update(bit);
  while (range_ < kTopValue) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
  return bit;
}

int RangeDecoder::decode_bypass() {
  std::uint32_t bound = range_ >> 1;
  int bit;
  if (code_ < bound) {
    bit = 1;
    range_ = bound;
  } else {
    bit = 0;
    code_ -= bound;
    range_ -= bound;
  }
  while (range_ < kTopValue) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
  return bit;
}

std::uint32_t RangeDecoder::decode_bypass_bits(int count) {
  std::uint32_t value = 0;
  for (int i = 0; i < count; ++i) {
    value = (value << 1) | static_cast<std::uint32_t>(decode_bypass());
  }
  return value;
}

void IntContexts::init_from_laplace(double b_over_step) {
  // A Laplace residual quantized with unit step is a two-sided geometric
  // magnitude with per-step decay rho = exp(-1/b). Each unary prefix bin
  // then has a closed-form continue probability, and the short suffixes
  // lean toward their smaller magnitudes by powers of rho.
  double b = std::max(b_over_step, 1e-6);
  double rho = std::exp(-1.0 / b);
  prefix[0] = BinaryContext(2.0 * rho / (1.0 + rho));
  for (std::size_t i = 1; i < prefix.size(); ++i) {
    double span = std::pow(rho, static_cast<double>(1u << i));
    prefix[i] = BinaryContext(span);
  }
  suffix1 = BinaryContext(rho / (1.0 + rho));
  suffix2[0] = BinaryContext(rho * rho / (1.0 + rho * rho));
  suffix2[1] = BinaryContext(rho / (1.0 + rho));
}

void encode_int(RangeEncoder& enc, IntContexts& ctx, std::int32_t value) {
  std::uint32_t magnitude =
      value < 0 ? static_cast<std::uint32_t>(-static_cast<std::int64_t>(value))
                : static_cast<std::uint32_t>(value);
  std::uint32_t code = magnitude + 1;  // order-0 exp-Golomb codes x >= 1
  int k = std::bit_width(code) - 1;
  for (int i = 0; i < k; ++i) {
    if (i < 16) {
      enc.encode_bit(ctx.prefix[static_cast<std::size_t>(i)], 1);
    } else {
      enc.encode_bypass(1);
    }
  }
  if (k < 16) {
    enc.encode_bit(ctx.prefix[static_cast<std::size_t>(k)], 0);
  } else {
    enc.encode_bypass(0);
  }
  std::uint32_t suffix = code - (1u << k);
  if (k == 1) {
    enc.encode_bit(ctx.suffix1, static_cast<int>(suffix));
  } else if (k == 2) {
    enc.encode_bit(ctx.suffix2[0], static_cast<int>(suffix >> 1));
    enc.encode_bit(ctx.suffix2[1], static_cast<int>(suffix & 1u));
  } else if (k > 2) {
    enc.encode_bypass_bits(suffix, k);
  }
  if (magnitude != 0) {
    enc.encode_bit(ctx.sign, value < 0 ? 1 : 0);
  }
}

std::int32_t decode_int(RangeDecoder& dec, IntContexts& ctx) {
  int k = 0;
  for (;;) {
    int bit = k < 16 ? dec.decode_bit(ctx.prefix[static_cast<std::size_t>(k)])
                     : dec.decode_bypass();
    if (!bit) break;
    ++k;
    if (k > 31) throw CorruptionError("exp-Golomb prefix exceeds 31 bins");
  }
  std::uint32_t suffix = 0;
  if (k == 1) {
    suffix = static_cast<std::uint32_t>(dec.decode_bit(ctx.suffix1));
  } else if (k == 2) {
    suffix = static_cast<std::uint32_t>(dec.decode_bit(ctx.suffix2[0])) << 1;
    suffix |= static_cast<std::uint32_t>(dec.decode_bit(ctx.suffix2[1]));
  } else if (k > 2) {
    suffix = dec.decode_bypass_bits(k);
  }
  std::uint64_t magnitude = ((1ull << k) | suffix) - 1;
  if (magnitude == 0) return 0;
  int sign = dec.decode_bit(ctx.sign);
  std::int64_t value = sign ? -static_cast<std::int64_t>(magnitude)
                            : static_cast<std::int64_t>(magnitude);
  return static_cast<std::int32_t>(value);
}

LaplaceParams fit_laplace(std::vector<double> values) {
  LaplaceParams params;
  if (values.empty()) return params;
  std::size_t n = values.size();
  std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  double median = values[mid];
  if (n % 2 == 0) {
    double lower = *std::max_element(values.begin(),
                                     values.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  double abs_dev = 0.0;
  for (double v : values) abs_dev += std::abs(v - median);
  params.mu = median;
  params.b = std::max(abs_dev / static_cast<double>(n), 1e-6);
  return params;
}

namespace {

double laplace_cdf(double x, double mu, double b) {
  double z = (x - mu) / b;
  return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
}

}  // namespace

double laplace_bits(double value, const LaplaceParams& params, double step) {
  if (step <= 0.0) throw InvalidInputError("laplace_bits requires step > 0");
  if (params.b <= 0.0) throw InvalidInputError("laplace_bits requires b > 0");
  double half = 0.5 * step;
  double mass = laplace_cdf(value + half, params.mu, params.b) -
                laplace_cdf(value - half, params.mu, params.b);
  if (mass >= 1.0) mass = 1.0;
  double bits = mass <= 0.0 ? std::numeric_limits<double>::infinity()
                            : -std::log2(mass);
  // Bins far in the tail underflow the CDF difference; cap at the rate of
  // the smallest representable mass instead of returning infinity.
  if (!std::isfinite(bits)) bits = 1074.0;
  return std::max(bits, 1e-9);
}

}  // namespace lpcm
