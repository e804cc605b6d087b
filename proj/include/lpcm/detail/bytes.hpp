// SPDX-FileCopyrightText: 2026 The lpcm authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "lpcm/errors.hpp"

namespace lpcm::detail {

// Little-endian byte-level serialization used by the container and the
// weight file. Floats go through their IEEE-754 bit patterns.

class ByteWriter {
public:
    void u8(uint8_t v) { out_.push_back(v); }
    void u16(uint16_t v) { raw(&v, 2); }
    void u32(uint32_t v) { raw(&v, 4); }
    void u64(uint64_t v) { raw(&v, 8); }
    void f32(float v) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void bytes(const std::vector<uint8_t>& b) { out_.insert(out_.end(), b.begin(), b.end()); }

    const std::vector<uint8_t>& data() const { return out_; }
    std::vector<uint8_t> take() { return std::move(out_); }
    size_t size() const { return out_.size(); }

private:
    void raw(const void* p, size_t n) {
        const auto* b = static_cast<const uint8_t*>(p);
        // Host is little-endian on every supported target.
        out_.insert(out_.end(), b, b + n);
    }
    std::vector<uint8_t> out_;
};

class ByteReader {
public:
    ByteReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
    explicit ByteReader(const std::vector<uint8_t>& v) : ByteReader(v.data(), v.size()) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() {
        uint16_t v;
        std::memcpy(&v, take(2), 2);
        return v;
    }
    uint32_t u32() {
        uint32_t v;
        std::memcpy(&v, take(4), 4);
        return v;
    }
    uint64_t u64() {
        uint64_t v;
        std::memcpy(&v, take(8), 8);
        return v;
    }
    float f32() {
        uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::vector<uint8_t> bytes(size_t n) {
        const uint8_t* p = take(n);
        return std::vector<uint8_t>(p, p + n);
    }

    size_t remaining() const { return size_ - pos_; }
    size_t position() const { return pos_; }

private:
    const uint8_t* take(size_t n) {
        if (pos_ + n > size_)
            throw CorruptionError("truncated stream: need " + std::to_string(n) + " bytes at offset " +
                                  std::to_string(pos_) + ", have " + std::to_string(size_ - pos_));
        const uint8_t* p = data_ + pos_;
        pos_ += n;
        return p;
    }
    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

/// CRC-32 (IEEE 802.3 polynomial, reflected). Used as the weight-file trailer.
uint32_t crc32(const uint8_t* data, size_t size, uint32_t seed = 0);

/// FNV-1a 64-bit hash. Used as the out-of-band weight-file fingerprint
/// recorded in the bitstream header.
uint64_t fnv1a64(const uint8_t* data, size_t size);

}  // namespace lpcm::detail
