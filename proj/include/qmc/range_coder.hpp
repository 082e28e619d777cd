// Copyright 2026 The qmc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Byte-oriented range coder: 32-bit range, 8-bit renormalization, carry
// propagation through a cached byte. Frequency totals must not exceed
// kMaxTotal.

#ifndef QMC_RANGE_CODER_HPP_
#define QMC_RANGE_CODER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "qmc/error.hpp"

namespace qmc {

inline constexpr uint32_t kRangeTop = 1u << 24;
inline constexpr uint32_t kMaxTotal = 1u << 16;

class RangeEncoder {
 public:
  void Encode(uint32_t cum, uint32_t freq, uint32_t total) {
    if (freq == 0 || total == 0 || total > kMaxTotal || cum + freq > total) {
      throw InvalidArgument("RangeEncoder: bad frequency triple");
    }
    const uint32_t r = range_ / total;
    low_ += static_cast<uint64_t>(r) * cum;
    range_ = r * freq;
    while (range_ < kRangeTop) {
      range_ <<= 8;
      ShiftLow();
    }
  }

  // Uniform bits, up to 32 at a time, sent 16 at a time.
  void EncodeBits(uint32_t value, int nbits) {
    while (nbits > 0) {
      const int chunk = nbits > 16 ? 16 : nbits;
      nbits -= chunk;
      const uint32_t part = (value >> nbits) & ((1u << chunk) - 1u);
      Encode(part, 1, 1u << chunk);
    }
  }

  std::vector<uint8_t> Finish() {
    for (int i = 0; i < 5; ++i) ShiftLow();
    return std::move(out_);
  }

 private:
  void ShiftLow() {
    if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
      const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
      uint8_t temp = cache_;
      do {
        Emit(static_cast<uint8_t>(temp + carry));
        temp = 0xFF;
      } while (--cache_size_ != 0);
      cache_ = static_cast<uint8_t>(low_ >> 24);
    }
    ++cache_size_;
    low_ = (low_ & 0x00FFFFFFu) << 8;
  }

  // The first byte out of the cache is always zero; it is not stored.
  void Emit(uint8_t b) {
    if (skip_first_) {
      skip_first_ = false;
      return;
    }
    out_.push_back(b);
  }

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  bool skip_first_ = true;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> data) : data_(data) {
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | NextByte();
  }

  // Returns the scaled target in [0, total); caller resolves the symbol and
  // then calls Consume with its (cum, freq).
  uint32_t GetFreq(uint32_t total) {
    if (total == 0 || total > kMaxTotal) {
      throw InvalidArgument("RangeDecoder: bad total");
    }
    step_ = range_ / total;
    const uint32_t v = code_ / step_;
    if (v >= total) throw DecodeError("range decoder: corrupt stream");
    return v;
  }

  void Consume(uint32_t cum, uint32_t freq) {
    code_ -= step_ * cum;
    range_ = step_ * freq;
    while (range_ < kRangeTop) {
      code_ = (code_ << 8) | NextByte();
      range_ <<= 8;
    }
  }

  uint32_t DecodeBits(int nbits) {
    uint32_t value = 0;
    while (nbits > 0) {
      const int chunk = nbits > 16 ? 16 : nbits;
      nbits -= chunk;
      const uint32_t part = GetFreq(1u << chunk);
      Consume(part, 1);
      value = (value << chunk) | part;
    }
    return value;
  }

  size_t consumed() const { return pos_; }

 private:
  uint32_t NextByte() {
    if (pos_ >= data_.size()) throw DecodeError("range decoder: truncated stream");
    return data_[pos_++];
  }

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t step_ = 1;
};

}  // namespace qmc

#endif  // QMC_RANGE_CODER_HPP_
